// output.hpp - CSV tables, atomic file writes and run manifests.
#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace dam {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kSchemaVersion = "1";

// Numbers print as %.12g; NaN prints as "nan".
std::string format_number(double v);

class CsvTable {
public:
    using Cell = std::variant<double, long long, std::string>;

    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<Cell> row);
    std::size_t rows() const { return rows_.size(); }
    const std::vector<std::string>& header() const { return header_; }
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

// Writes to a sibling temporary file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct ManifestFile {
    std::string name;
    std::size_t rows = 0;
};

class Manifest {
public:
    Manifest(std::string command, nlohmann::json config_echo, std::string config_hash);

    void add_seed(std::uint64_t seed) { seeds_.push_back(seed); }
    void set_generator(std::string name) { generator_ = std::move(name); }
    void set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }
    // Writes the table under dir and records it.
    void write_table(const std::filesystem::path& dir, const std::string& name, const CsvTable& table);
    void add_file(std::string name, std::size_t rows) { files_.push_back({std::move(name), rows}); }

    nlohmann::json to_json() const;
    // manifest.json, written last.
    void write(const std::filesystem::path& dir) const;

private:
    std::string command_;
    nlohmann::json config_;
    std::string hash_;
    std::vector<std::uint64_t> seeds_;
    std::string generator_;
    nlohmann::json extra_ = nlohmann::json::object();
    std::vector<ManifestFile> files_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
    std::chrono::system_clock::time_point started_at_ = std::chrono::system_clock::now();
};

}  // namespace dam
