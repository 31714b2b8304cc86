#include "cylweb/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace cylweb::io {

std::uint64_t file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("file_digest: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    return h;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {
std::string csv_quote(const std::string& cell) {
    if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}
}  // namespace

struct CsvWriter::Impl {
    std::ofstream out;
    std::size_t columns = 0;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : impl_(new Impl) {
    impl_->out.open(path, std::ios::binary);
    if (!impl_->out) {
        delete impl_;
        throw std::runtime_error("CsvWriter: cannot open " + path);
    }
    impl_->columns = header.size();
    row(header);
}

CsvWriter::~CsvWriter() {
    close();
    delete impl_;
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != impl_->columns) throw std::invalid_argument("CsvWriter: column mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) impl_->out << ',';
        impl_->out << csv_quote(cells[i]);
    }
    impl_->out << "\r\n";
}

void CsvWriter::close() {
    if (impl_->out.is_open()) impl_->out.close();
}

struct NdjsonWriter::Impl {
    std::ofstream out;
};

NdjsonWriter::NdjsonWriter(const std::string& path) : impl_(new Impl) {
    impl_->out.open(path, std::ios::binary);
    if (!impl_->out) {
        delete impl_;
        throw std::runtime_error("NdjsonWriter: cannot open " + path);
    }
}

NdjsonWriter::~NdjsonWriter() {
    close();
    delete impl_;
}

void NdjsonWriter::record(const nlohmann::ordered_json& obj) {
    impl_->out << obj.dump() << '\n';
}

void NdjsonWriter::raw_line(const std::string& line) { impl_->out << line << '\n'; }

void NdjsonWriter::close() {
    if (impl_->out.is_open()) impl_->out.close();
}

void RunManifest::add_output(const std::string& path) {
    ManifestEntry e;
    e.path = path;
    e.digest = file_digest(path);
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    e.bytes = in ? static_cast<std::uint64_t>(in.tellg()) : 0;
    outputs.push_back(e);
}

void RunManifest::write(const std::string& path) const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config"] = config;
    {
        const std::string cfg = config.dump();
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : cfg) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        j["config_digest"] = h;
    }
    j["master_seed"] = master_seed;
    j["task_seeds"] = task_seeds;
    j["version"] = version;
    j["wall_clock_sec"] = wall_clock_sec;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : outputs) {
        arr.push_back({{"path", e.path}, {"fnv1a64", e.digest}, {"bytes", e.bytes}});
    }
    j["outputs"] = arr;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("RunManifest: cannot open " + path);
    out << j.dump(2) << '\n';
}

nlohmann::json load_config(const std::string& path, const std::vector<std::string>& allowed_keys) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (!j.is_object()) throw std::runtime_error("load_config: top level must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const auto& k : allowed_keys)
            if (k == it.key()) {
                known = true;
                break;
            }
        if (!known) throw std::runtime_error("load_config: unknown key '" + it.key() + "'");
    }
    return j;
}

std::string library_version() { return "0.1.0"; }

}  // namespace cylweb::io
