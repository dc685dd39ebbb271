#include "commands.hpp"

int main(int argc, char** argv) { return cevr::cli::run(argc, argv); }
