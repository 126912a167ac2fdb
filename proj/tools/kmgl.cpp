#include "kmgl/app.hpp"

int main(int argc, char** argv) { return kmgl::app::run_cli(argc, argv); }
