#include "cnp/app/output.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cnp::app {

namespace {

constexpr int kVtkLine = 3;
constexpr int kVtkQuad = 9;
constexpr int kVtkHex = 12;

// Corners in VTK order as (a, b, c) offsets.
constexpr int kQuadCorners[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
constexpr int kHexCorners[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                   {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

const NamedArray& find(const std::vector<NamedArray>& v, const std::string& name)
{
    for (const auto& a : v)
        if (a.name == name)
            return a;
    throw InvalidArgument("no array named '" + name + "'");
}

std::string sanitize(const std::string& name)
{
    std::string s = name;
    for (char& c : s)
        if (c == ' ' || c == '\t')
            c = '_';
    return s;
}

} // namespace

const NamedArray& VtkDataSet::point_array(const std::string& name) const { return find(point_data, name); }
const NamedArray& VtkDataSet::cell_array(const std::string& name) const { return find(cell_data, name); }

DgVtkWriter::DgVtkWriter(const fe::FeSpace& space, double coordinate_scale) : space_(space)
{
    const auto& m = space.mesh();
    const int dim = m.dim();
    const int p = space.order();
    const int n1 = p + 1;
    const int nc = 1 << dim;

    // local dof of each VTK corner
    for (int c = 0; c < nc; ++c) {
        const int a = dim == 3 ? kHexCorners[c][0] : kQuadCorners[c][0];
        const int b = dim == 3 ? kHexCorners[c][1] : kQuadCorners[c][1];
        const int k = dim == 3 ? kHexCorners[c][2] : 0;
        corner_node_.push_back(a * p + n1 * (b * p + n1 * k * p));
    }

    const auto& nodes = space.ref().nodes();
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        std::vector<int> cell;
        for (int c = 0; c < nc; ++c) {
            Point x = space.to_physical(e, nodes[corner_node_[c]]);
            for (double& v : x)
                v *= coordinate_scale;
            cell.push_back(static_cast<int>(data_.points.size()));
            data_.points.push_back(x);
        }
        data_.cells.push_back(std::move(cell));
        data_.cell_types.push_back(dim == 3 ? kVtkHex : kVtkQuad);
    }

    NamedArray tags{"boundary_tag", std::vector<double>(m.num_elements(), -1.0)};
    for (const auto& bf : m.boundary_faces()) {
        const int axis = mesh::face_axis(bf.local_face);
        const int side = mesh::face_side(bf.local_face);
        std::vector<int> cell;
        for (int c = 0; c < nc; ++c) {
            const int off[3] = {dim == 3 ? kHexCorners[c][0] : kQuadCorners[c][0],
                                dim == 3 ? kHexCorners[c][1] : kQuadCorners[c][1], dim == 3 ? kHexCorners[c][2] : 0};
            if (off[axis] == side)
                cell.push_back(static_cast<int>(bf.element) * nc + c);
        }
        if (dim == 3 && axis != 2) // x and y faces come out in tensor order, VTK quads need a cycle
            std::swap(cell[2], cell[3]);
        data_.cells.push_back(std::move(cell));
        data_.cell_types.push_back(dim == 3 ? kVtkQuad : kVtkLine);
        tags.values.push_back(static_cast<double>(static_cast<int>(bf.tag)));
    }
    data_.cell_data.push_back(std::move(tags));
}

void DgVtkWriter::add_field(const std::string& name, std::span<const double> coeffs, double scale)
{
    if (coeffs.size() != space_.num_dofs())
        throw InvalidArgument("field '" + name + "' does not match the space");
    NamedArray a{name, {}};
    a.values.reserve(data_.points.size());
    for (std::size_t e = 0; e < space_.mesh().num_elements(); ++e)
        for (int node : corner_node_)
            a.values.push_back(scale * coeffs[space_.offset(e) + node]);
    data_.point_data.push_back(std::move(a));
}

void DgVtkWriter::add_boundary_field(const std::string& name, std::span<const double> per_boundary_face)
{
    const auto& m = space_.mesh();
    if (per_boundary_face.size() != m.boundary_faces().size())
        throw InvalidArgument("boundary field '" + name + "' does not match the mesh");
    NamedArray a{name, std::vector<double>(m.num_elements(), 0.0)};
    a.values.insert(a.values.end(), per_boundary_face.begin(), per_boundary_face.end());
    data_.cell_data.push_back(std::move(a));
}

void write_vtk(const VtkDataSet& d, std::ostream& os, const std::string& title)
{
    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << std::setprecision(12);
    os << "POINTS " << d.points.size() << " double\n";
    for (const auto& x : d.points)
        os << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';
    std::size_t total = 0;
    for (const auto& c : d.cells)
        total += c.size() + 1;
    os << "CELLS " << d.cells.size() << ' ' << total << '\n';
    for (const auto& c : d.cells) {
        os << c.size();
        for (int v : c)
            os << ' ' << v;
        os << '\n';
    }
    os << "CELL_TYPES " << d.cell_types.size() << '\n';
    for (int t : d.cell_types)
        os << t << '\n';
    auto arrays = [&os](const std::vector<NamedArray>& v) {
        for (const auto& a : v) {
            os << "SCALARS " << sanitize(a.name) << " double 1\nLOOKUP_TABLE default\n";
            for (double x : a.values)
                os << x << '\n';
        }
    };
    if (!d.cell_data.empty()) {
        os << "CELL_DATA " << d.cells.size() << '\n';
        arrays(d.cell_data);
    }
    if (!d.point_data.empty()) {
        os << "POINT_DATA " << d.points.size() << '\n';
        arrays(d.point_data);
    }
    if (!os)
        throw IoError("failed writing VTK data");
}

void write_vtk(const VtkDataSet& data, const std::filesystem::path& path, const std::string& title)
{
    auto os = open_output(path);
    write_vtk(data, os, title);
    os.close();
    if (!os)
        throw IoError("failed writing '" + path.string() + "'");
}

VtkDataSet read_vtk(std::istream& is)
{
    VtkDataSet d;
    std::string line;
    for (int i = 0; i < 4; ++i)
        if (!std::getline(is, line))
            throw IoError("truncated VTK header");
    if (line.find("UNSTRUCTURED_GRID") == std::string::npos)
        throw IoError("only unstructured grids are supported");
    std::string key;
    std::vector<NamedArray>* target = nullptr;
    std::size_t count = 0;
    while (is >> key) {
        if (key == "POINTS") {
            std::string type;
            is >> count >> type;
            d.points.resize(count);
            for (auto& x : d.points)
                is >> x[0] >> x[1] >> x[2];
        } else if (key == "CELLS") {
            std::size_t n = 0, total = 0;
            is >> n >> total;
            d.cells.resize(n);
            for (auto& c : d.cells) {
                std::size_t k = 0;
                is >> k;
                c.resize(k);
                for (int& v : c)
                    is >> v;
            }
        } else if (key == "CELL_TYPES") {
            std::size_t n = 0;
            is >> n;
            d.cell_types.resize(n);
            for (int& t : d.cell_types)
                is >> t;
        } else if (key == "CELL_DATA") {
            is >> count;
            target = &d.cell_data;
        } else if (key == "POINT_DATA") {
            is >> count;
            target = &d.point_data;
        } else if (key == "SCALARS") {
            if (!target)
                throw IoError("SCALARS outside a data section");
            std::string name, type, lt, table;
            int comps = 1;
            is >> name >> type;
            std::getline(is, line);
            std::istringstream rest(line);
            if (rest >> comps && comps != 1)
                throw IoError("only single-component arrays are supported");
            is >> lt >> table;
            NamedArray a{name, std::vector<double>(count)};
            for (double& v : a.values)
                is >> v;
            target->push_back(std::move(a));
        } else {
            throw IoError("unsupported VTK section '" + key + "'");
        }
        if (!is)
            throw IoError("malformed VTK section '" + key + "'");
    }
    return d;
}

VtkDataSet read_vtk(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open '" + path.string() + "'");
    return read_vtk(is);
}

void ensure_directory(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory '" + dir.string() + "'");
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot open '" + path.string() + "' for writing");
    return os;
}

CsvTable& CsvTable::operator<<(const std::string& v)
{
    if (rows_.empty())
        throw InvalidArgument("CsvTable: call row() before adding values");
    if (rows_.back().size() == header_.size())
        throw InvalidArgument("CsvTable: too many values in row");
    rows_.back().push_back(v);
    return *this;
}

CsvTable& CsvTable::operator<<(double v)
{
    std::ostringstream s;
    if (std::isnan(v))
        s << "nan";
    else
        s << std::setprecision(17) << v;
    return *this << s.str();
}

CsvTable& CsvTable::operator<<(long long v) { return *this << std::to_string(v); }

void CsvTable::write(std::ostream& os) const
{
    for (std::size_t i = 0; i < header_.size(); ++i)
        os << (i ? "," : "") << header_[i];
    os << '\n';
    for (const auto& r : rows_) {
        if (r.size() != header_.size())
            throw InvalidArgument("CsvTable: incomplete row");
        for (std::size_t i = 0; i < r.size(); ++i)
            os << (i ? "," : "") << r[i];
        os << '\n';
    }
}

void CsvTable::write(const std::filesystem::path& path) const
{
    auto os = open_output(path);
    write(os);
    os.close();
    if (!os)
        throw IoError("failed writing '" + path.string() + "'");
}

} // namespace cnp::app
