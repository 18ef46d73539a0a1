#include "medeeg/commands.hpp"

int main(int argc, char** argv) { return medeeg::cli::main_entry(argc, argv); }
