#include "gsocc/app.hpp"

#include <iostream>

int main(int argc, char** argv) { return gsocc::run_app(argc, argv, std::cout, std::cerr); }
