#include "dam/output.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace dam {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<Cell> row) {
    if (row.size() != header_.size()) throw std::invalid_argument("CSV row width does not match the header");
    rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::ostringstream out;
    for (std::size_t k = 0; k < header_.size(); ++k) out << (k ? "," : "") << header_[k];
    out << '\n';
    for (const auto& row : rows_) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out << ',';
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) out << format_number(v);
                    else out << v;
                },
                row[k]);
        }
        out << '\n';
    }
    return out.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Manifest::Manifest(std::string command, nlohmann::json config_echo, std::string config_hash)
    : command_(std::move(command)), config_(std::move(config_echo)), hash_(std::move(config_hash)) {}

void Manifest::write_table(const std::filesystem::path& dir, const std::string& name, const CsvTable& table) {
    write_atomic(dir / name, table.str());
    add_file(name, table.rows());
}

nlohmann::json Manifest::to_json() const {
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const std::time_t t = std::chrono::system_clock::to_time_t(started_at_);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);

    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : files_) files.push_back({{"name", f.name}, {"rows", f.rows}});
    return {{"command", command_},
            {"config_hash", hash_},
            {"config", config_},
            {"seeds", seeds_},
            {"generator", generator_},
            {"version", kVersion},
            {"schema_version", kSchemaVersion},
            {"started_at", stamp},
            {"wall_clock_seconds", elapsed},
            {"extra", extra_},
            {"files", files}};
}

void Manifest::write(const std::filesystem::path& dir) const {
    write_atomic(dir / "manifest.json", to_json().dump(2) + "\n");
}

}  // namespace dam
