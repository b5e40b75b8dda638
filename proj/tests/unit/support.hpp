#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gendfir/gendfir.hpp"

namespace testing_support {

inline std::filesystem::path source_dir() { return GENDFIR_SOURCE_DIR; }
inline std::filesystem::path scenario(const std::string& name) { return source_dir() / "data" / "scenarios" / name; }
inline std::filesystem::path fixture(const std::string& name) { return source_dir() / "tests" / "fixtures" / name; }

// Unauthorised-access knowledge base as rendered from the scenario CSV.
inline std::string unauthorised_access_document() {
    return gendfir::render_incident_document(gendfir::read_incident_csv(scenario("unauthorised_access.csv"))).text;
}

inline gendfir::KnowledgeBase unauthorised_access_kb(const gendfir::EmbeddingProvider& provider) {
    gendfir::ChunkingConfig cfg;
    cfg.max_length = 208;
    return gendfir::build_kb_from_document(unauthorised_access_document(), provider, cfg, "Unauthorised Access");
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t d, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(d);
    for (auto& x : v) x = u(rng);
    return v;
}

inline std::string temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "gendfir_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

template <typename F>
gendfir::ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const gendfir::Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected a gendfir::Error";
    return gendfir::ErrorCode::Io;
}

}  // namespace testing_support
