#include "iatfp/cli_app.hpp"

int main(int argc, char** argv) { return iatfp::cli::run(argc, argv); }
