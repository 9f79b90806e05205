#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace aerocomm
{
//---------------------------------------------------------------------------//
/*!
 * Counter-based random stream.
 *
 * Each output is a stateless hash of (key, counter), so a stream is fully
 * described by two integers. Streams are keyed by the global seed plus
 * whatever identifies the consumer (particle id, agent id, purpose tag), which
 * makes draws independent of execution order and thread count.
 *
 * Satisfies UniformRandomBitGenerator.
 */
class CounterRng
{
  public:
    using result_type = std::uint64_t;

    constexpr CounterRng() = default;
    constexpr explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
        : key_(key), counter_(counter)
    {
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max()
    {
        return std::numeric_limits<result_type>::max();
    }

    constexpr result_type operator()()
    {
        return mix(key_ ^ mix(counter_++ + 0x9e3779b97f4a7c15ULL));
    }

    constexpr std::uint64_t key() const { return key_; }
    constexpr std::uint64_t counter() const { return counter_; }

    friend constexpr bool operator==(CounterRng const&, CounterRng const&)
        = default;

    //! SplitMix64 finalizer.
    static constexpr std::uint64_t mix(std::uint64_t z)
    {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t key_{0};
    std::uint64_t counter_{0};
};

//! Fold any number of integers into a stream key.
template<class... Ts>
constexpr std::uint64_t stream_key(std::uint64_t seed, Ts... parts)
{
    std::uint64_t k = CounterRng::mix(seed + 0x632be59bd9b4e019ULL);
    ((k = CounterRng::mix(k ^ (static_cast<std::uint64_t>(parts)
                               + 0x9e3779b97f4a7c15ULL + (k << 6) + (k >> 2)))),
     ...);
    return k;
}

//! Purpose tags so different consumers of one id never share a stream.
enum class StreamTag : std::uint64_t
{
    transport = 1,
    absorption = 2,
    events = 3,
    emission = 4,
};

//! Uniform on [0, 1).
template<class Rng>
double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

//! Uniform on (0, 1].
template<class Rng>
double uniform_open_closed(Rng& rng)
{
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

template<class Rng>
bool bernoulli(Rng& rng, double p)
{
    return uniform01(rng) < p;
}

//! Standard normal via Box-Muller (one output per call, no cached state).
template<class Rng>
double standard_normal(Rng& rng)
{
    double u1 = uniform_open_closed(rng);
    double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1))
           * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace aerocomm
