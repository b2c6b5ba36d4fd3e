#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ids4nr/errors.hpp"
#include "ids4nr/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"deterministic synthetic benchmark dataset generator"};
    ids4nr::SynthSpec spec;
    std::string out = "data/synth";
    app.add_option("--out", out, "output directory");
    app.add_option("--users", spec.users, "number of users");
    app.add_option("--items", spec.items, "number of items");
    app.add_option("--interactions", spec.interactions,
                   "total distinct interactions");
    app.add_option("--seed", spec.seed, "generator seed");
    app.add_option("--genres", spec.genres, "number of genres");
    app.add_option("--zipf", spec.zipf, "popularity skew exponent");
    app.add_option("--conformity", spec.conformity,
                   "scale on users' popularity-driven behavior");
    CLI11_PARSE(app, argc, argv);

    try {
        ids4nr::write_synthetic_dataset(spec, out);
        std::cout << "wrote " << out << "/interactions.tsv (" << spec.users
                  << " users, " << spec.items << " items, "
                  << spec.interactions << " interactions)\n";
    } catch (const ids4nr::Error& e) {
        std::cerr << "ERROR " << e.category() << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}
