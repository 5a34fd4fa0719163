#include "rbi/problems.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/QR>

#include "rbi/mtx_io.hpp"

namespace rbi {

double ProblemInstance::sigma_min() const { return require_svd().sigma_min(); }
double ProblemInstance::sigma_max() const { return require_svd().sigma_max(); }

const SvdSummary& ProblemInstance::require_svd() const {
    if (!svd) throw InvalidInput("problem '" + label + "' has no SVD summary (above the dense-SVD ceiling)");
    return *svd;
}

DenseMatrix random_orthonormal(index_t rows, index_t cols, Rng& rng) {
    if (cols < 0 || cols > rows) throw InvalidInput("random_orthonormal: need 0 <= cols <= rows");
    DenseMatrix g(rows, cols);
    for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<DenseMatrix> qr(g);
    DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(rows, cols);
    const DenseMatrix& r = qr.matrixQR();
    for (Eigen::Index j = 0; j < cols; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

SynthFactors synth_factors(index_t m, index_t n, index_t r, double kappa, Rng& rng) {
    if (m < 1 || n < 1) throw InvalidInput("synthetic matrix needs m, n >= 1");
    if (r < 1 || r > std::min(m, n)) {
        std::ostringstream os;
        os << "rank r = " << r << " must satisfy 1 <= r <= min(m, n) = " << std::min(m, n);
        throw InvalidInput(os.str());
    }
    if (!(kappa >= 1.0)) throw InvalidInput("kappa must be >= 1");
    SynthFactors f;
    f.u = random_orthonormal(m, r, rng);
    f.v = random_orthonormal(n, r, rng);
    f.d.resize(static_cast<std::size_t>(r));
    for (auto& di : f.d) di = 1.0 + (kappa - 1.0) * rng.uniform();
    return f;
}

Matrix assemble(const SynthFactors& f) {
    const DenseMatrix a = f.u * as_eigen(f.d).asDiagonal() * f.v.transpose();
    return Matrix::from_eigen(a);
}

Matrix synth_matrix(index_t m, index_t n, index_t r, double kappa, Rng& rng) {
    return assemble(synth_factors(m, n, r, kappa, rng));
}

Vector consistent_rhs(const Matrix& a, Rng& rng) {
    Vector g(static_cast<std::size_t>(a.cols()));
    for (auto& v : g) v = rng.normal();
    return mat_vec(a, g);
}

Vector inconsistent_rhs(const Matrix& a, const SvdSummary& svd, Rng& rng) {
    if (svd.rank >= a.rows()) throw InvalidInput("inconsistent rhs needs rank < m: the left null space is trivial");
    Vector b = consistent_rhs(a, rng);
    Vector h(static_cast<std::size_t>(a.rows()));
    for (auto& v : h) v = rng.normal();
    const Vector nh = project_left_nullspace(svd, h);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += nh[i];
    return b;
}

Vector compose_rhs(const Matrix& a, std::span<const double> g, const DenseMatrix& null_basis,
                   std::span<const double> h) {
    Vector b = mat_vec(a, g);
    if (null_basis.rows() != a.rows() || null_basis.cols() != static_cast<Eigen::Index>(h.size()))
        throw InvalidInput("compose_rhs: null basis shape mismatch");
    const Eigen::VectorXd nh = null_basis * as_eigen(h);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += nh(static_cast<Eigen::Index>(i));
    return b;
}

Vector x_star(const SvdSummary& svd, std::span<const double> b, std::span<const double> x0) {
    Vector x = pinv_apply(svd, b);
    const Vector p = project_nullspace(svd, x0);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += p[i];
    return x;
}

bool is_consistent(const SvdSummary& svd, std::span<const double> b) {
    const Vector res = project_left_nullspace(svd, b);
    return norm(res) <= 1e-9 * norm(b);
}

void finalize(ProblemInstance& p, SvdSummary svd) {
    p.rank = svd.rank;
    p.x_ref = pinv_apply(svd, p.b);
    p.consistent = is_consistent(svd, p.b);
    p.svd = std::move(svd);
}

ProblemInstance make_synthetic(const SyntheticParams& s) {
    Rng rng = Rng::stream(s.seed, 0, hash_label("problem"));
    const SynthFactors f = synth_factors(s.m, s.n, s.r, s.kappa, rng);
    ProblemInstance p;
    p.a = assemble(f);
    SvdSummary svd = svd_from_factors(f.u, f.d, f.v);
    p.b = s.consistent ? consistent_rhs(p.a, rng) : inconsistent_rhs(p.a, svd, rng);
    p.kappa_bound = s.kappa;
    p.seed = s.seed;
    std::ostringstream os;
    os << "synthetic(" << s.m << "," << s.n << "," << s.r << "," << s.kappa << ","
       << (s.consistent ? "consistent" : "inconsistent") << ")";
    p.label = os.str();
    finalize(p, std::move(svd));
    return p;
}

ProblemInstance make_from_matrix(Matrix a, RhsMode mode, std::uint64_t seed, std::string label,
                                 const SvdOptions& opts) {
    ProblemInstance p;
    p.a = std::move(a);
    p.seed = seed;
    p.label = std::move(label);
    Rng rng = Rng::stream(seed, 0, hash_label("rhs"));
    SvdSummary svd = svd_summary(p.a, opts);
    p.b = mode == RhsMode::Consistent ? consistent_rhs(p.a, rng) : inconsistent_rhs(p.a, svd, rng);
    finalize(p, std::move(svd));
    return p;
}

void write_vector(const std::filesystem::path& path, std::span<const double> v) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char buf[64];
    for (double x : v) {
        const auto res = std::to_chars(buf, buf + sizeof buf, x);
        out << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Vector read_vector(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Vector v;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        double x = 0.0;
        const auto res = std::from_chars(line.data(), line.data() + line.size(), x);
        if (res.ec != std::errc{})
            throw std::runtime_error(path.string() + ": line " + std::to_string(lineno) + ": not a number");
        v.push_back(x);
    }
    return v;
}

void save_problem(const ProblemInstance& p, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_matrix_market(dir / "A.mtx", p.a);
    write_vector(dir / "b.txt", p.b);
    write_vector(dir / "x_ref.txt", p.x_ref);
    std::ofstream meta(dir / "meta.txt");
    if (!meta) throw std::runtime_error("cannot write " + (dir / "meta.txt").string());
    meta << "label=" << p.label << '\n'
         << "rows=" << p.rows() << '\n'
         << "cols=" << p.cols() << '\n'
         << "rank=" << p.rank << '\n'
         << "consistent=" << (p.consistent ? 1 : 0) << '\n'
         << "seed=" << p.seed << '\n';
    if (!std::isnan(p.kappa_bound)) meta << "kappa_bound=" << p.kappa_bound << '\n';
    if (!meta) throw std::runtime_error("write failed: " + (dir / "meta.txt").string());
}

ProblemInstance load_problem(const std::filesystem::path& dir, const SvdOptions& opts) {
    std::map<std::string, std::string> meta;
    {
        std::ifstream in(dir / "meta.txt");
        if (!in) throw std::runtime_error("cannot open " + (dir / "meta.txt").string());
        std::string line;
        while (std::getline(in, line)) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            meta[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }
    ProblemInstance p;
    Matrix a = read_matrix_market(dir / "A.mtx");
    // Synthetic matrices are stored as coordinate files; restore dense storage when nothing is zero.
    if (a.nnz() == static_cast<std::size_t>(a.rows() * a.cols())) a = Matrix::from_eigen(a.to_dense());
    p.a = std::move(a);
    p.b = read_vector(dir / "b.txt");
    if (p.b.size() != static_cast<std::size_t>(p.a.rows())) throw InvalidInput("b.txt length does not match A");
    if (meta.count("label")) p.label = meta["label"];
    if (meta.count("seed")) p.seed = std::stoull(meta["seed"]);
    if (meta.count("kappa_bound")) p.kappa_bound = std::stod(meta["kappa_bound"]);
    try {
        finalize(p, svd_summary(p.a, opts));
    } catch (const SvdTooLarge&) {
        // Fall back to the stored reference and metadata.
        p.x_ref = read_vector(dir / "x_ref.txt");
        p.rank = meta.count("rank") ? std::stoll(meta["rank"]) : 0;
        p.consistent = meta.count("consistent") ? meta["consistent"] == "1" : true;
    }
    return p;
}

}  // namespace rbi
