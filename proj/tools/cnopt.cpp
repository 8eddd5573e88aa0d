#include "cnopt/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return cnopt::cli::run(argc, argv, std::cout, std::cerr);
}
