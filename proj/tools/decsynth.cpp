#include <decsynth/cli_app.hpp>

int main(int argc, char** argv) { return decsynth::cli::run(argc, argv); }
