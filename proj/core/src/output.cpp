#include "pilotwave/output.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>

#include "pilotwave/error.hpp"

namespace pilotwave {

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != header.size()) {
        throw ValidationError("table row has " + std::to_string(row.size()) + " cells, header has " +
                              std::to_string(header.size()));
    }
    rows.push_back(std::move(row));
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 17);
    return std::string(buf.data(), res.ptr);
}

Table residual_table() { return Table{{"scenario", "equation", "rel_l2", "l_inf", "unmasked_fraction", "n", "dt"}, {}}; }

void add_residual_row(Table& table, const std::string& scenario, const ResidualReport& r) {
    table.add_row({scenario, r.equation, r.rel_l2, r.l_inf, r.unmasked_fraction, static_cast<std::int64_t>(r.n), r.dt});
}

Table trajectory_table(int dim) {
    static const char* axes[] = {"x", "y", "z"};
    static const char* vel[] = {"vx", "vy", "vz"};
    Table t;
    t.header.push_back("t");
    for (int a = 0; a < dim; ++a) t.header.push_back(axes[a]);
    for (int a = 0; a < dim; ++a) t.header.push_back(vel[a]);
    t.header.push_back("action");
    return t;
}

void add_trajectory_rows(Table& table, const Trajectory& trajectory, int dim) {
    for (const auto& s : trajectory.samples) {
        std::vector<Cell> row{s.t};
        for (int a = 0; a < dim; ++a) row.emplace_back(s.position[a]);
        for (int a = 0; a < dim; ++a) row.emplace_back(s.velocity[a]);
        row.emplace_back(s.action);
        table.add_row(std::move(row));
    }
}

Table summary_table() { return Table{{"scenario", "metric", "value"}, {}}; }

namespace {

std::string csv_cell(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + '"';
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

}  // namespace

void emit_csv(const Table& table, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    const auto write_row = [&](const auto& cells, auto&& to_text) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << to_text(cells[i]);
        }
        out << '\n';
    };
    write_row(table.header, [](const std::string& h) { return csv_cell(Cell{h}); });
    for (const auto& row : table.rows) write_row(row, csv_cell);
    if (!out.flush()) throw Error("failed writing " + path.string());
}

HeatmapInfo emit_heatmap(const RealField& field, const std::filesystem::path& path,
                         std::optional<std::pair<double, double>> range, const std::vector<std::uint8_t>& mask) {
    const auto& g = field.grid;
    if (g.dim() != 2) throw ValidationError("heatmaps need a 2D field");
    if (!mask.empty() && mask.size() != g.size()) throw ValidationError("heatmap mask size mismatch");
    const auto valid = [&](std::size_t j) { return mask.empty() || mask[j] != 0; };

    HeatmapInfo info;
    info.min = std::numeric_limits<double>::infinity();
    info.max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (!valid(j)) {
            ++info.masked;
            continue;
        }
        info.min = std::min(info.min, field.values[j]);
        info.max = std::max(info.max, field.values[j]);
    }
    if (range) {
        info.min = range->first;
        info.max = range->second;
    }
    info.degenerate = !(info.max > info.min);

    const std::size_t width = g.points(0);
    const std::size_t height = g.points(1);
    std::vector<unsigned char> pixels(width * height * 2);
    for (std::size_t row = 0; row < height; ++row) {
        for (std::size_t col = 0; col < width; ++col) {
            const std::size_t j = g.ravel({col, row, 0});
            std::uint16_t v = 0;
            if (valid(j)) {
                if (info.degenerate) {
                    v = 32768;
                } else {
                    const double u = std::clamp((field.values[j] - info.min) / (info.max - info.min), 0.0, 1.0);
                    v = static_cast<std::uint16_t>(std::lround(u * 65535.0));
                }
            }
            const std::size_t o = 2 * (row * width + col);
            pixels[o] = static_cast<unsigned char>(v >> 8);
            pixels[o + 1] = static_cast<unsigned char>(v & 0xff);
        }
    }
    {
        auto out = open_for_write(path);
        out << "P5\n" << width << ' ' << height << "\n65535\n";
        out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
        if (!out.flush()) throw Error("failed writing " + path.string());
    }

    info.sidecar = path;
    info.sidecar.replace_extension(".txt");
    auto side = open_for_write(info.sidecar);
    side << "image " << path.filename().string() << '\n';
    side << "width " << width << '\n';
    side << "height " << height << '\n';
    side << "min " << format_number(info.min) << '\n';
    side << "max " << format_number(info.max) << '\n';
    side << "range " << (range ? "supplied" : "data") << '\n';
    side << "masked " << info.masked << '\n';
    if (info.degenerate) side << "note min equals max; every unmasked pixel is mid-gray 32768\n";
    if (!side.flush()) throw Error("failed writing " + info.sidecar.string());
    return info;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 unavailable");
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned int i = 0; i < len; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 0xf];
    }
    return s;
}

}  // namespace pilotwave
