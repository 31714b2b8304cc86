#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace cylweb::io {

/// FNV-1a digest of a file's bytes, for run manifests.
std::uint64_t file_digest(const std::string& path);

/// Shortest round-trip decimal representation ("%.17g").
std::string fmt_double(double v);

/// RFC-4180 CSV writer: header row, quoting only where needed.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    ~CsvWriter();
    void row(const std::vector<std::string>& cells);
    void close();

private:
    struct Impl;
    Impl* impl_;
};

/// One JSON object per line, UTF-8.
class NdjsonWriter {
public:
    explicit NdjsonWriter(const std::string& path);
    ~NdjsonWriter();
    void record(const nlohmann::ordered_json& obj);
    void raw_line(const std::string& line);
    void close();

private:
    struct Impl;
    Impl* impl_;
};

struct ManifestEntry {
    std::string path;
    std::uint64_t digest = 0;
    std::uint64_t bytes = 0;
};

struct RunManifest {
    std::string command;
    nlohmann::ordered_json config;
    std::uint64_t master_seed = 0;
    nlohmann::ordered_json task_seeds;  // task path -> derived seed
    std::string version;
    double wall_clock_sec = 0.0;
    std::vector<ManifestEntry> outputs;

    void add_output(const std::string& path);
    void write(const std::string& path) const;
};

/// Strict config reader: any key not in the allowed set is an error.
nlohmann::json load_config(const std::string& path, const std::vector<std::string>& allowed_keys);

std::string library_version();

}  // namespace cylweb::io
