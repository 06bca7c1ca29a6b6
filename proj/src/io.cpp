#include "hetgm/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "hetgm/rng.hpp"

namespace hetgm {

namespace {

// Shortest decimal that round-trips a double.
std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) {
        for (int prec = 1; prec < 17; ++prec) {
            char shorter[32];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            std::sscanf(shorter, "%lf", &back);
            if (back == v) return shorter;
        }
    }
    return buf;
}

}  // namespace

void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& writer) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("atomic_write: cannot open " + tmp.string());
        writer(out);
        out.flush();
        if (!out) throw std::runtime_error("atomic_write: write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("file_checksum: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const auto got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016" PRIx64, h);
    return hex;
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
    atomic_write(path, [&](std::ostream& out) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                if (j) out << ',';
                out << format_double(m(i, j));
            }
            out << '\n';
        }
    });
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("read_matrix_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream fields(line);
        std::string cell;
        while (std::getline(fields, cell, ',')) {
            row.push_back(std::stod(cell));
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::invalid_argument("read_matrix_csv: ragged rows in " + path);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("read_matrix_csv: empty file " + path);
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

void write_omega_csv(const OmegaField& field, const std::string& path) {
    atomic_write(path, [&](std::ostream& out) {
        out << "node,j,l,value\n";
        for (int i = 0; i < field.node_count(); ++i) {
            const auto& m = field.matrices[static_cast<std::size_t>(i)];
            for (int j = 0; j < field.dim; ++j) {
                for (int l = j; l < field.dim; ++l) {
                    out << i << ',' << j << ',' << l << ',' << format_double(m(j, l)) << '\n';
                }
            }
        }
    });
}

OmegaField read_omega_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("read_omega_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("node,", 0) != 0) {
        throw std::invalid_argument("read_omega_csv: missing header in " + path);
    }
    struct Entry {
        int node, j, l;
        double value;
    };
    std::vector<Entry> entries;
    int max_node = -1, max_dim = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Entry e{};
        if (std::sscanf(line.c_str(), "%d,%d,%d,%lf", &e.node, &e.j, &e.l, &e.value) != 4) {
            throw std::invalid_argument("read_omega_csv: malformed row in " + path);
        }
        max_node = std::max(max_node, e.node);
        max_dim = std::max({max_dim, e.j, e.l});
        entries.push_back(e);
    }
    OmegaField field;
    field.dim = max_dim + 1;
    field.matrices.assign(static_cast<std::size_t>(max_node + 1),
                          Eigen::MatrixXd::Zero(field.dim, field.dim));
    for (const auto& e : entries) {
        field.matrices[static_cast<std::size_t>(e.node)](e.j, e.l) = e.value;
        field.matrices[static_cast<std::size_t>(e.node)](e.l, e.j) = e.value;
    }
    return field;
}

void write_edges_jsonl(const EdgeSetCollection& edges, const std::string& path) {
    atomic_write(path, [&](std::ostream& out) {
        for (int i = 0; i < edges.node_count; ++i) {
            nlohmann::json row;
            row["node"] = i;
            row["d"] = edges.dim;
            auto pairs = nlohmann::json::array();
            for (const auto& [j, l] : edges.edges[static_cast<std::size_t>(i)]) {
                pairs.push_back({j, l});
            }
            row["edges"] = std::move(pairs);
            out << row.dump() << '\n';
        }
    });
}

EdgeSetCollection read_edges_jsonl(const std::string& path, int dim_hint) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("read_edges_jsonl: cannot open " + path);
    EdgeSetCollection out;
    out.dim = dim_hint;
    std::string line;
    std::vector<std::pair<int, std::vector<std::pair<int, int>>>> rows;
    int max_node = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto row = nlohmann::json::parse(line);
        const int node = row.at("node").get<int>();
        if (row.contains("d")) out.dim = std::max(out.dim, row.at("d").get<int>());
        std::vector<std::pair<int, int>> edges;
        for (const auto& e : row.at("edges")) {
            edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        }
        std::sort(edges.begin(), edges.end());
        max_node = std::max(max_node, node);
        rows.emplace_back(node, std::move(edges));
    }
    out.node_count = max_node + 1;
    out.edges.resize(static_cast<std::size_t>(out.node_count));
    for (auto& [node, edges] : rows) {
        out.edges[static_cast<std::size_t>(node)] = std::move(edges);
    }
    for (const auto& edges : out.edges) {
        for (const auto& [j, l] : edges) {
            if (j < 0 || l <= j) throw std::invalid_argument("read_edges_jsonl: bad pair");
            out.dim = std::max(out.dim, l + 1);
        }
    }
    return out;
}

}  // namespace hetgm
