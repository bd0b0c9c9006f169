#include "emot/app.hpp"

int main(int argc, char** argv) { return emot::run_cli(argc, argv); }
