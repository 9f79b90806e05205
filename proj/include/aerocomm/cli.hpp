#pragma once

#include <iosfwd>

namespace aerocomm
{
//! Exit codes: 0 success, 1 usage or validation error, 2 runtime error.
int cli_main(int argc, char const* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aerocomm
