// Writes a synthetic digit corpus as MNIST-layout IDX files, for demo runs
// and tests on machines without the real dataset.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mpsr/dataset.hpp"
#include "synth/synth_digits.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthetic digit IDX generator"};
    std::size_t per_class = 500;
    std::uint64_t seed = 1;
    std::string images = "train-images-idx3-ubyte";
    std::string labels = "train-labels-idx1-ubyte";
    app.add_option("--per-class", per_class, "images per digit class");
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--images", images, "output image file");
    app.add_option("--labels", labels, "output label file");
    CLI11_PARSE(app, argc, argv);

    try {
        const mpsr::Dataset d = mpsr::synth::digits(per_class, seed);
        mpsr::write_idx(d, images, labels);
        std::cout << "wrote " << d.count() << " images (" << d.height << "x"
                  << d.width << ") to " << images << " / " << labels << "\n";
    } catch (const std::exception& e) {
        std::cerr << "datagen: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
