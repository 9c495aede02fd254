#include "occslam/cli.hpp"

int main(int argc, char** argv) { return occslam::CliMain(argc, argv); }
