#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace hdx::cli {

/** Hex SHA-256 of a file's bytes; throws InvalidInput when it cannot be read. */
std::string sha256_file(const std::string& path);

/**
 * Provenance record embedded in every report: command line, parsed flags,
 * seed, library version, thread count and input hashes. Wall time is
 * included only on request so exact-mode reports stay byte-identical.
 */
class RunManifest {
public:
    RunManifest(std::string command, std::vector<std::string> argv);

    void set_flag(const std::string& name, nlohmann::json value);
    void set_seed(std::optional<std::uint64_t> seed) { seed_ = seed; }
    void set_threads(unsigned threads) { threads_ = threads; }
    void record_time(bool on) { record_time_ = on; }
    void add_input(const std::string& path);

    nlohmann::json to_json() const;

private:
    std::string command_;
    std::vector<std::string> argv_;
    nlohmann::json flags_ = nlohmann::json::object();
    std::optional<std::uint64_t> seed_;
    unsigned threads_ = 1;
    bool record_time_ = false;
    std::map<std::string, std::string> inputs_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace hdx::cli
