#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "qualnet/ingest.hpp"
#include "qualnet/model.hpp"

namespace qualnet::testing {

inline std::filesystem::path source_path(const std::string& relative) {
    return std::filesystem::path(QUALNET_SOURCE_DIR) / relative;
}

inline std::filesystem::path fixture(const std::string& name) {
    return source_path("data/fixtures/" + name);
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("qualnet-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Fixture corpus with overview and the five concepts, no indicators yet.
inline Project fixture_project() {
    Project p;
    p.project_id = "fixture";
    p.overview = ResearchOverview{read_text(fixture("overview.txt"))};
    const auto concepts = nlohmann::json::parse(read_text(fixture("concepts.json")));
    for (const auto& c : concepts) {
        Concept con;
        con.concept_id = p.next_concept_id();
        con.name = c.at("name").get<std::string>();
        con.definition = c.at("definition").get<std::string>();
        con.color = c.at("color").get<std::string>();
        p.concepts.push_back(std::move(con));
    }
    ingest::ingest_corpus(p, read_text(fixture("corpus.txt")));
    return p;
}

}  // namespace qualnet::testing
