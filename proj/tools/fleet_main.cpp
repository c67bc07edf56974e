#include "fleet/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return fleet::run_cli(argc, argv, std::cout, std::cerr);
}
