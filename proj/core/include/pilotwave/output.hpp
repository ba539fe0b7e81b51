#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pilotwave/bohm.hpp"
#include "pilotwave/grid.hpp"
#include "pilotwave/verify.hpp"

namespace pilotwave {

using Cell = std::variant<std::string, double, std::int64_t>;

/// A CSV table: one header row, then rows of the same width.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
};

/// Shortest round-trip-safe text for a double with 17 significant digits
/// ("%.17g"); nan and inf are spelled out.
std::string format_number(double value);

// Fixed layouts, documented in docs/formats.md.

/// scenario,equation,rel_l2,l_inf,unmasked_fraction,n,dt
Table residual_table();
void add_residual_row(Table& table, const std::string& scenario, const ResidualReport& report);

/// t, x[, y, z], vx[, vy, vz], action
Table trajectory_table(int dim);
void add_trajectory_rows(Table& table, const Trajectory& trajectory, int dim);

/// scenario,metric,value
Table summary_table();

/// Writes UTF-8 CSV with LF line endings. Throws Error when the path cannot
/// be written.
void emit_csv(const Table& table, const std::filesystem::path& path);

struct HeatmapInfo {
    double min = 0.0;
    double max = 0.0;
    std::size_t masked = 0;
    bool degenerate = false;
    std::filesystem::path sidecar;
};

/// Binary 16-bit PGM (P5, big-endian samples). Pixel (row, column) holds
/// grid point (x index = column, y index = row), so y grows downward. Values
/// map linearly from [min, max] (or `range`) onto [0, 65535], clamped; a
/// constant field maps to 32768 and masked points (mask value 0) to 0. A text
/// sidecar `<stem>.txt` next to the image records the range and mask count.
/// Throws ValidationError for fields that are not 2D.
HeatmapInfo emit_heatmap(const RealField& field, const std::filesystem::path& path,
                         std::optional<std::pair<double, double>> range = std::nullopt,
                         const std::vector<std::uint8_t>& mask = {});

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace pilotwave
