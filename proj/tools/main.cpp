#include "commands.hpp"

int main(int argc, char** argv) { return gsec::cli::run(std::vector<std::string>(argv, argv + argc)); }
