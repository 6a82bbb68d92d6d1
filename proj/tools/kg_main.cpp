#include "kg/pipeline.hpp"

int main(int argc, char** argv) {
    return kg::pipeline::run_cli(argc, argv);
}
