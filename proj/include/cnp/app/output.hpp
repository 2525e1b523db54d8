#pragma once

#include "cnp/fespace.hpp"

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cnp::app {

class IoError : public Error {
public:
    using Error::Error;
};

struct NamedArray {
    std::string name;
    std::vector<double> values;
};

/// Unstructured legacy-VTK data set: points, cells of one VTK type each, and
/// scalar point and cell arrays.
struct VtkDataSet {
    std::vector<Point> points;
    std::vector<std::vector<int>> cells;
    std::vector<int> cell_types;
    std::vector<NamedArray> point_data;
    std::vector<NamedArray> cell_data;

    const NamedArray& point_array(const std::string& name) const;
    const NamedArray& cell_array(const std::string& name) const;
};

/// DG fields on a discontinuous point set: every element owns its 2^dim corners.
/// Volume cells come first, then one cell per boundary face with a `boundary_tag`
/// cell array (-1 on volume cells). Coordinates are multiplied by `coordinate_scale`.
class DgVtkWriter {
public:
    DgVtkWriter(const fe::FeSpace& space, double coordinate_scale = 1.0);

    /// Adds a field from DG coefficients, multiplied by `scale`.
    void add_field(const std::string& name, std::span<const double> coeffs, double scale = 1.0);
    /// Adds one value per boundary face (0 on volume cells).
    void add_boundary_field(const std::string& name, std::span<const double> per_boundary_face);

    const VtkDataSet& data() const { return data_; }

private:
    const fe::FeSpace& space_;
    VtkDataSet data_;
    std::vector<int> corner_node_;
};

void write_vtk(const VtkDataSet& data, std::ostream& os, const std::string& title = "cnp fields");
void write_vtk(const VtkDataSet& data, const std::filesystem::path& path, const std::string& title = "cnp fields");
VtkDataSet read_vtk(std::istream& is);
VtkDataSet read_vtk(const std::filesystem::path& path);

/// Creates the directory if needed; throws IoError on failure.
void ensure_directory(const std::filesystem::path& dir);
/// Opens a file for writing; throws IoError on failure.
std::ofstream open_output(const std::filesystem::path& path);

/// Rows of a CSV table with a fixed header. Values are written with 17 significant digits.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    CsvTable& row() { rows_.emplace_back(); return *this; }
    CsvTable& operator<<(const std::string& v);
    CsvTable& operator<<(const char* v) { return *this << std::string(v); }
    CsvTable& operator<<(double v);
    CsvTable& operator<<(long long v);
    CsvTable& operator<<(int v) { return *this << static_cast<long long>(v); }
    CsvTable& operator<<(long v) { return *this << static_cast<long long>(v); }
    CsvTable& operator<<(std::size_t v) { return *this << static_cast<long long>(v); }

    const std::vector<std::string>& header() const { return header_; }
    std::size_t size() const { return rows_.size(); }

    void write(std::ostream& os) const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace cnp::app
