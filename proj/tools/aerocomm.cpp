#include <iostream>

#include "aerocomm/cli.hpp"

int main(int argc, char** argv)
{
    return aerocomm::cli_main(argc, argv, std::cout, std::cerr);
}
