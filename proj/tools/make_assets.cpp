// Regenerates the bundled sample assets under a data directory:
//   rig/params_default.json, rig/jeffers.map,
//   sample/template/*, sample/bank/*, sample/alignment.json
// The alignment is derived from sample/words.json and the lexicon excerpt.

#include "vedicthg/pipeline.hpp"
#include "vedicthg/sample_assets.hpp"

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_assets <data-dir>\n";
        return 2;
    }
    const std::filesystem::path data = argv[1];
    try {
        const auto params = vthg::ParamBank::builtin_default();
        std::filesystem::create_directories(data / "rig");
        std::ofstream(data / "rig" / "params_default.json") << params.serialize();
        std::ofstream(data / "rig" / "jeffers.map") << vthg::VisemeMap::builtin_jeffers().serialize();
        vthg::write_sample_assets(data / "sample", params);

        vthg::RunConfig cfg;
        cfg.lexicon_path = data / "lexicon" / "cmudict_excerpt.dict";
        const auto assets = vthg::load_assets(cfg);
        const auto timing = vthg::read_timing(data / "sample" / "words.json");
        const auto stream = vthg::resolve_timing(timing, &*assets.lexicon);
        std::ofstream(data / "sample" / "alignment.json") << vthg::serialize_alignment(stream);
        std::cout << "wrote assets under " << data.string() << " (" << stream.size() << " phonemes, "
                  << stream.total_duration_s() << " s)\n";
    } catch (const std::exception& e) {
        std::cerr << "make_assets: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
