#include "rbi/mtx_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace rbi {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool blank_or_comment(const std::string& line) {
    const auto p = line.find_first_not_of(" \t\r");
    return p == std::string::npos || line[p] == '%';
}

}  // namespace

Matrix read_matrix_market(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("empty input", 0);
    ++lineno;

    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") throw ParseError("missing %%MatrixMarket banner", lineno);
    object = lower(object);
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (object != "matrix") throw ParseError("unsupported object '" + object + "'", lineno);
    if (format != "coordinate" && format != "array") throw ParseError("unsupported format '" + format + "'", lineno);
    if (field == "pattern" || field == "complex")
        throw ParseError("unsupported field '" + field + "': only real and integer data are accepted", lineno);
    if (field != "real" && field != "integer" && field != "double")
        throw ParseError("unsupported field '" + field + "'", lineno);
    if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric")
        throw ParseError("unsupported symmetry '" + symmetry + "'", lineno);
    const bool coordinate = format == "coordinate";

    do {
        if (!std::getline(in, line)) throw ParseError("missing size line", lineno);
        ++lineno;
    } while (blank_or_comment(line));

    long long rows = -1, cols = -1, entries = -1;
    {
        std::istringstream ss(line);
        ss >> rows >> cols;
        if (coordinate) ss >> entries;
        if (ss.fail() || rows < 0 || cols < 0 || (coordinate && entries < 0))
            throw ParseError("malformed size line", lineno);
    }
    if (!coordinate) {
        entries = rows * cols;
        if (symmetry != "general") entries = symmetry == "symmetric" ? rows * (rows + 1) / 2 : rows * (rows - 1) / 2;
        if (symmetry != "general" && rows != cols) throw ParseError("symmetric array storage requires a square matrix", lineno);
    }

    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(entries) * (symmetry == "general" ? 1 : 2));
    long long read = 0;
    // Array storage is column-major; for symmetric data only the lower triangle is listed.
    long long ai = 0, aj = 0;
    if (symmetry == "skew-symmetric" && !coordinate) ai = 1;
    while (read < entries && std::getline(in, line)) {
        ++lineno;
        if (blank_or_comment(line)) continue;
        std::istringstream ss(line);
        long long i = 0, j = 0;
        double v = 0.0;
        if (coordinate) {
            ss >> i >> j >> v;
            if (ss.fail()) throw ParseError("malformed entry", lineno);
            if (i < 1 || i > rows || j < 1 || j > cols)
                throw ParseError("index (" + std::to_string(i) + ", " + std::to_string(j) + ") outside declared " +
                                     std::to_string(rows) + "x" + std::to_string(cols),
                                 lineno);
            --i;
            --j;
        } else {
            ss >> v;
            if (ss.fail()) throw ParseError("malformed entry", lineno);
            i = ai;
            j = aj;
            ++ai;
            if (ai >= rows) {
                ++aj;
                ai = symmetry == "general" ? 0 : (symmetry == "symmetric" ? aj : aj + 1);
            }
        }
        ++read;
        if (symmetry != "general" && i < j) throw ParseError("symmetric storage must list the lower triangle", lineno);
        if (v == 0.0 && !coordinate) continue;
        trips.push_back({i, j, v});
        if (i != j && symmetry == "symmetric") trips.push_back({j, i, v});
        if (i != j && symmetry == "skew-symmetric") trips.push_back({j, i, -v});
    }
    if (read < entries)
        throw ParseError("expected " + std::to_string(entries) + " entries, found " + std::to_string(read), lineno);
    return Matrix::from_triplets(rows, cols, std::move(trips));
}

Matrix read_matrix_market(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const Matrix& a) {
    const auto t = a.triplets();
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << t.size() << '\n';
    char buf[64];
    for (const auto& e : t) {
        const auto res = std::to_chars(buf, buf + sizeof buf, e.value);
        out << e.row + 1 << ' ' << e.col + 1 << ' ' << std::string_view(buf, res.ptr - buf) << '\n';
    }
}

void write_matrix_market(const std::filesystem::path& path, const Matrix& a) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_matrix_market(out, a);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace rbi
