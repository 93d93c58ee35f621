#include "cli_app.hpp"

int main(int argc, char** argv) { return diffvote::cli::run(argc, argv); }
