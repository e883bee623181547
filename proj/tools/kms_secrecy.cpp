#include <iostream>

#include "kms/cli.hpp"

int main(int argc, char** argv)
{
    return kms::cli::run(argc, argv, std::cout, std::cerr);
}
