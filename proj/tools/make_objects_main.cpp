#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "sceneforge/synthetic.hpp"

// Emits a directory of procedural object PLYs (cuboids, l-shapes, spheres in
// a few nameable colors) plus a mapping.json, ready for `sceneforge ingest`.
int main(int argc, char** argv) {
    CLI::App app{"write procedural object PLYs for pool building"};
    std::string out_dir = "objects";
    std::string classes = "chair,table,lamp,cart";
    std::size_t per_cell = 2;
    std::size_t points = 1024;
    std::uint64_t seed = 1;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--classes", classes, "comma-separated class labels");
    app.add_option("--per-cell", per_cell, "objects per (class, shape, color) cell");
    app.add_option("--points", points, "points per object");
    app.add_option("--seed", seed, "generator seed");
    CLI11_PARSE(app, argc, argv);

    sceneforge::DemoPoolConfig cfg;
    cfg.classes.clear();
    std::stringstream ss(classes);
    std::string cls;
    while (std::getline(ss, cls, ',')) {
        if (!cls.empty()) cfg.classes.push_back(cls);
    }
    cfg.per_cell = per_cell;
    cfg.points = points;

    try {
        const std::size_t n = sceneforge::write_demo_objects(out_dir, cfg, seed);
        std::printf("wrote %zu objects and mapping.json to %s\n", n, out_dir.c_str());
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
