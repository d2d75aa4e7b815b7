#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "sgdm/error.hpp"
#include "sgdm/problems.hpp"

namespace sgdm {

namespace {

constexpr const char* kMagic = "sgdm-problem";
constexpr int kVersion = 1;

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void values(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(p[i]));
      out_.write(reinterpret_cast<const char*>(&bits), 8);
    }
  }
  void scalar(double v) { values(&v, 1); }
  void vec(const Vector& v) { values(v.data(), static_cast<std::size_t>(v.size())); }
  void mat(const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) scalar(m(r, c));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void values(double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits = 0;
      in_.read(reinterpret_cast<char*>(&bits), 8);
      if (!in_) throw InvalidInput("problem dump truncated");
      p[i] = std::bit_cast<double>(to_le(bits));
    }
  }
  double scalar() {
    double v = 0.0;
    values(&v, 1);
    return v;
  }
  Vector vec(std::size_t n) {
    Vector v(static_cast<Eigen::Index>(n));
    values(v.data(), n);
    return v;
  }
  Matrix mat(std::size_t n) {
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scalar();
    return m;
  }

 private:
  std::istream& in_;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void save_problem(const ProblemInstance& problem, std::ostream& out) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "family " << to_string(problem.family()) << '\n';
  out << "seed " << problem.seed() << '\n';
  out << "n_samples " << problem.n_samples() << '\n';
  out << "dim " << problem.dim() << '\n';
  Writer w(out);
  if (const auto* q = problem.quadratic()) {
    out << "rho " << num(q->rho) << '\n' << "shift " << num(q->shift) << '\n' << "data\n";
    w.values(q->bank.data(), q->bank.size());
    w.mat(q->hessian);
    w.vec(q->b_mean);
    w.vec(q->x_star);
    w.scalar(q->sigma2);
    w.mat(q->omega);
    for (double v : {q->mu, q->ell, q->sample_mu, q->sample_ell}) w.scalar(v);
  } else {
    const auto* l = problem.logistic();
    out << "nu " << num(l->nu) << '\n' << "data\n";
    w.values(l->features.data(), l->features.size());
    w.values(l->labels.data(), l->labels.size());
    w.vec(l->x_true);
    w.vec(l->x_star);
    w.mat(l->hessian);
    w.scalar(l->sigma2);
    w.mat(l->omega);
    for (double v : {l->mu, l->ell, l->lbar, l->lf, l->grad_norm_at_star,
                     static_cast<double>(l->gd_iterations)})
      w.scalar(v);
  }
  if (!out) throw InvalidInput("failed writing problem dump");
}

void save_problem(const ProblemInstance& problem, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  save_problem(problem, out);
}

ProblemInstance load_problem(std::istream& in) {
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kMagic || version != kVersion) throw InvalidInput("not a problem dump");
  std::map<std::string, std::string> header;
  std::string key;
  while (in >> key && key != "data") {
    std::string value;
    in >> value;
    header[key] = value;
  }
  if (key != "data") throw InvalidInput("problem dump has no data section");
  in.get();

  auto field = [&](const std::string& k) {
    auto it = header.find(k);
    if (it == header.end()) throw InvalidInput("problem dump missing header field " + k);
    return it->second;
  };
  const std::size_t n = std::stoull(field("n_samples"));
  const std::size_t d = std::stoull(field("dim"));
  const std::uint64_t seed = std::stoull(field("seed"));
  Reader r(in);

  if (field("family") == "quadratic") {
    auto q = std::make_shared<QuadraticProblem>();
    q->n_samples = n;
    q->dim = d;
    q->seed = seed;
    q->rho = std::stod(field("rho"));
    q->shift = std::stod(field("shift"));
    q->bank.resize(n * q->stride());
    r.values(q->bank.data(), q->bank.size());
    q->hessian = r.mat(d);
    q->b_mean = r.vec(d);
    q->x_star = r.vec(d);
    q->sigma2 = r.scalar();
    q->omega = r.mat(d);
    q->mu = r.scalar();
    q->ell = r.scalar();
    q->sample_mu = r.scalar();
    q->sample_ell = r.scalar();
    return ProblemInstance(std::shared_ptr<const QuadraticProblem>(std::move(q)));
  }
  if (field("family") == "logistic") {
    auto l = std::make_shared<LogisticProblem>();
    l->n_samples = n;
    l->dim = d;
    l->seed = seed;
    l->nu = std::stod(field("nu"));
    l->features.resize(n * d);
    r.values(l->features.data(), l->features.size());
    l->labels.resize(n);
    r.values(l->labels.data(), n);
    l->x_true = r.vec(d);
    l->x_star = r.vec(d);
    l->hessian = r.mat(d);
    l->sigma2 = r.scalar();
    l->omega = r.mat(d);
    l->mu = r.scalar();
    l->ell = r.scalar();
    l->lbar = r.scalar();
    l->lf = r.scalar();
    l->grad_norm_at_star = r.scalar();
    l->gd_iterations = static_cast<int>(r.scalar());
    return ProblemInstance(std::shared_ptr<const LogisticProblem>(std::move(l)));
  }
  throw InvalidInput("unknown problem family " + field("family"));
}

ProblemInstance load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path);
  return load_problem(in);
}

}  // namespace sgdm
