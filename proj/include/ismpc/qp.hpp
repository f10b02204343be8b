#pragma once

// Dense strictly convex QP
//
//   minimize    1/2 u' H u + g' u
//   subject to  A_eq u  = b_eq
//               A_in u <= b_in
//
// solved with the Goldfarb-Idnani dual active-set method. Equality rows stay in
// the working set for the whole solve. The method starts from the
// unconstrained minimizer, so it needs no primal-feasible starting point;
// when a violated constraint cannot be added a Farkas certificate is returned.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ismpc {

template <typename Scalar>
struct QpProblem {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix H;
  Vector g;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_in;
  Vector b_in;

  Eigen::Index numVariables() const { return H.rows(); }
  Eigen::Index numEqualities() const { return A_eq.rows(); }
  Eigen::Index numInequalities() const { return A_in.rows(); }

  /// Throws std::invalid_argument on inconsistent dimensions.
  void checkDimensions() const {
    const Eigen::Index n = H.rows();
    if (H.cols() != n || g.size() != n) throw std::invalid_argument("QpProblem: H/g dimension");
    if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n))
      throw std::invalid_argument("QpProblem: equality block dimension");
    if (A_in.rows() != b_in.size() || (A_in.rows() > 0 && A_in.cols() != n))
      throw std::invalid_argument("QpProblem: inequality block dimension");
  }
};

enum class QpStatus { Solved, Infeasible, MaxIterations };

inline const char* toString(QpStatus s) {
  switch (s) {
    case QpStatus::Solved: return "solved";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIterations: return "max_iter";
  }
  return "unknown";
}

template <typename Scalar>
struct QpSolution {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  QpStatus status = QpStatus::MaxIterations;
  Vector u;
  /// Indices of active inequality rows, in the order they entered.
  std::vector<int> active_set;
  /// Equality multipliers first, then one per inequality row (zero if inactive).
  /// Sign convention:  H u + g + A_eq' lambda + A_in' mu = 0,  mu >= 0.
  Vector multipliers;
  /// Farkas certificate (y_eq, y_in) when infeasible:  A_eq' y_eq + A_in' y_in = 0,
  /// y_in >= 0,  b_eq' y_eq + b_in' y_in < 0.
  Vector certificate;
  int iterations = 0;
  bool regularized = false;

  bool solved() const { return status == QpStatus::Solved; }
};

struct QpSettings {
  double feasibility_tol = 1e-10;
  double dependency_tol = 1e-10;
  double regularization = 1e-9;
  int max_iterations = 0;  // 0 -> 10 (n + m)
};

namespace detail {

// Working factorization of the dual active-set method: J' N = [R; 0] where
// N collects the active constraint normals (>= convention) and J' H J = I.
template <typename Scalar>
class GoldfarbIdnani {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  GoldfarbIdnani(const Matrix& J0, Eigen::Index max_active)
      : J_(J0), R_(Matrix::Zero(J0.rows(), std::max<Eigen::Index>(max_active, 1))) {}

  Eigen::Index active() const { return iq_; }
  const Matrix& J() const { return J_; }

  // d = J' n, z = J2 d2 (primal step), r = R^-1 d1 (dual step).
  void directions(const Vector& normal, Vector& d, Vector& z, Vector& r) const {
    const Eigen::Index n = J_.rows();
    d.noalias() = J_.transpose() * normal;
    z.noalias() = J_.rightCols(n - iq_) * d.tail(n - iq_);
    r = R_.topLeftCorner(iq_, iq_).template triangularView<Eigen::Upper>().solve(d.head(iq_));
  }

  // Appends the constraint whose d = J' n was computed by directions().
  // Returns false (without modifying state) if it is dependent on the active set.
  bool add(Vector d, Scalar dependency_tol) {
    const Eigen::Index n = J_.rows();
    if (iq_ >= n) return false;
    const Scalar dnorm = d.norm();
    if (d.tail(n - iq_).norm() <= dependency_tol * std::max(dnorm, Scalar(1e-300))) return false;
    for (Eigen::Index j = n - 1; j > iq_; --j) {
      const Scalar a = d(j - 1);
      const Scalar b = d(j);
      if (b == Scalar(0)) continue;
      const Scalar h = std::hypot(a, b);
      const Scalar c = a / h;
      const Scalar s = b / h;
      d(j - 1) = h;
      d(j) = Scalar(0);
      rotateColumns(j - 1, j, c, s);
    }
    R_.col(iq_).head(iq_ + 1) = d.head(iq_ + 1);
    ++iq_;
    return true;
  }

  // Removes the working-set entry at position pos and restores triangularity.
  void remove(Eigen::Index pos) {
    for (Eigen::Index k = pos; k + 1 < iq_; ++k) R_.col(k) = R_.col(k + 1);
    R_.col(iq_ - 1).setZero();
    --iq_;
    for (Eigen::Index j = pos; j < iq_; ++j) {
      const Scalar a = R_(j, j);
      const Scalar b = R_(j + 1, j);
      if (b == Scalar(0)) continue;
      const Scalar h = std::hypot(a, b);
      const Scalar c = a / h;
      const Scalar s = b / h;
      for (Eigen::Index k = j; k < iq_; ++k) {
        const Scalar r1 = R_(j, k);
        const Scalar r2 = R_(j + 1, k);
        R_(j, k) = c * r1 + s * r2;
        R_(j + 1, k) = -s * r1 + c * r2;
      }
      R_(j + 1, j) = Scalar(0);
      rotateColumns(j, j + 1, c, s);
    }
  }

  // Minimizer over the active manifold and its multipliers:
  // x = -J1 R^-T c0 - J2 J2' g,  u = R^-1 (J1' g - R^-T c0).
  void resolve(const Vector& g, const Vector& c0_active, Vector& x, Vector& u) const {
    const Eigen::Index n = J_.rows();
    const auto R = R_.topLeftCorner(iq_, iq_).template triangularView<Eigen::Upper>();
    const Vector a = -R.transpose().solve(c0_active);
    x = J_.leftCols(iq_) * a - J_.rightCols(n - iq_) * (J_.rightCols(n - iq_).transpose() * g);
    u = R.solve(a + J_.leftCols(iq_).transpose() * g);
  }

 private:
  void rotateColumns(Eigen::Index i, Eigen::Index j, Scalar c, Scalar s) {
    tmp_ = J_.col(i);
    J_.col(i) = c * tmp_ + s * J_.col(j);
    J_.col(j) = c * J_.col(j) - s * tmp_;
  }

  Matrix J_;
  Matrix R_;
  Vector tmp_;
  Eigen::Index iq_ = 0;
};

}  // namespace detail

/// Solves the QP. Throws std::invalid_argument if H is not positive
/// semidefinite (beyond the regularization) or A_eq is row-rank deficient.
template <typename Scalar>
QpSolution<Scalar> solveQp(const QpProblem<Scalar>& p,
                           std::optional<std::span<const int>> warm_start = std::nullopt,
                           const QpSettings& settings = {}) {
  using Matrix = typename QpProblem<Scalar>::Matrix;
  using Vector = typename QpProblem<Scalar>::Vector;
  p.checkDimensions();

  const Eigen::Index n = p.numVariables();
  const Eigen::Index me = p.numEqualities();
  const Eigen::Index mi = p.numInequalities();
  const int max_iter =
      settings.max_iterations > 0 ? settings.max_iterations : static_cast<int>(10 * (n + mi + me) + 10);

  if ((p.H - p.H.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * (Scalar(1) + p.H.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("solveQp: H is not symmetric");

  QpSolution<Scalar> sol;
  sol.multipliers = Vector::Zero(me + mi);

  // Hessian factorization; J = L^-T.
  Matrix J0;
  const bool diagonal = (p.H.diagonal().asDiagonal().toDenseMatrix() - p.H).cwiseAbs().maxCoeff() == Scalar(0);
  if (diagonal && (p.H.diagonal().array() > Scalar(0)).all()) {
    J0 = p.H.diagonal().cwiseSqrt().cwiseInverse().asDiagonal();
  } else {
    Eigen::LLT<Matrix> llt(p.H);
    if (llt.info() != Eigen::Success) {
      Matrix Hr = p.H;
      Hr.diagonal().array() += Scalar(settings.regularization);
      llt.compute(Hr);
      if (llt.info() != Eigen::Success) throw std::invalid_argument("solveQp: H is not positive semidefinite");
      sol.regularized = true;
    }
    J0 = llt.matrixU().solve(Matrix::Identity(n, n));
  }
  detail::GoldfarbIdnani<Scalar> gi(J0, std::min<Eigen::Index>(n, me + mi));

  // Internally every constraint is  n_k' x + c0_k (>= or =) 0.
  auto normal = [&](Eigen::Index k) -> Vector {
    return k < me ? Vector(p.A_eq.row(k).transpose()) : Vector(-p.A_in.row(k - me).transpose());
  };
  auto offset = [&](Eigen::Index k) -> Scalar { return k < me ? -p.b_eq(k) : p.b_in(k - me); };

  std::vector<Eigen::Index> active;  // constraint ids in working-set order
  Vector x, u;
  Vector d(n), z(n), r;

  auto activeOffsets = [&]() {
    Vector c(static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) c(static_cast<Eigen::Index>(i)) = offset(active[i]);
    return c;
  };

  for (Eigen::Index k = 0; k < me; ++k) {
    gi.directions(normal(k), d, z, r);
    if (!gi.add(d, Scalar(settings.dependency_tol)))
      throw std::invalid_argument("solveQp: equality constraints are rank deficient");
    active.push_back(k);
  }

  if (warm_start) {
    std::vector<bool> seen(static_cast<std::size_t>(mi), false);
    for (int w : *warm_start) {
      if (w < 0 || w >= mi || seen[static_cast<std::size_t>(w)]) continue;
      seen[static_cast<std::size_t>(w)] = true;
      gi.directions(normal(me + w), d, z, r);
      if (gi.add(d, Scalar(settings.dependency_tol))) active.push_back(me + w);
    }
  }
  gi.resolve(p.g, activeOffsets(), x, u);
  // Dual feasibility of the warm working set: drop negative multipliers.
  for (;;) {
    Eigen::Index worst = -1;
    Scalar worst_val = Scalar(0);
    for (Eigen::Index i = me; i < static_cast<Eigen::Index>(active.size()); ++i)
      if (u(i) < worst_val) {
        worst_val = u(i);
        worst = i;
      }
    if (worst < 0) break;
    gi.remove(worst);
    active.erase(active.begin() + worst);
    gi.resolve(p.g, activeOffsets(), x, u);
  }
  for (Eigen::Index i = me; i < u.size(); ++i) u(i) = std::max(u(i), Scalar(0));

  std::vector<char> is_active(static_cast<std::size_t>(mi), 0);
  for (Eigen::Index k : active)
    if (k >= me) is_active[static_cast<std::size_t>(k - me)] = 1;
  std::vector<char> excluded(static_cast<std::size_t>(mi), 0);

  const Scalar tol = Scalar(settings.feasibility_tol);
  Vector row_scale(mi);
  for (Eigen::Index j = 0; j < mi; ++j)
    row_scale(j) = std::max(Scalar(1), p.A_in.row(j).template lpNorm<Eigen::Infinity>());
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  int iter = 0;

  auto finish = [&](QpStatus status) {
    sol.status = status;
    sol.u = x;
    sol.iterations = iter;
    sol.active_set.clear();
    for (std::size_t i = 0; i < active.size(); ++i) {
      const Eigen::Index k = active[i];
      const Scalar ui = u(static_cast<Eigen::Index>(i));
      if (k < me) {
        sol.multipliers(k) = -ui;
      } else {
        sol.multipliers(k) = ui;
        sol.active_set.push_back(static_cast<int>(k - me));
      }
    }
    return sol;
  };

  for (;;) {
    // Step 1: most violated inactive inequality (smallest index on ties).
    Eigen::Index ip = -1;
    Scalar smin = -tol;
    const Vector slack = p.b_in - p.A_in * x;
    for (Eigen::Index j = 0; j < mi; ++j) {
      if (is_active[static_cast<std::size_t>(j)] || excluded[static_cast<std::size_t>(j)]) continue;
      const Scalar s = slack(j) / row_scale(j);
      if (s < smin) {
        smin = s;
        ip = j;
      }
    }
    if (ip < 0) return finish(QpStatus::Solved);

    const Vector np = normal(me + ip);
    Scalar u_p = Scalar(0);
    const Vector x_old = x;
    const Vector u_old = u;
    const std::vector<Eigen::Index> active_old = active;

    // Step 2: move until constraint ip is satisfied or proved unsatisfiable.
    for (;;) {
      if (++iter > max_iter) return finish(QpStatus::MaxIterations);
      gi.directions(np, d, z, r);
      const Eigen::Index iq = gi.active();
      const Scalar s_p = np.dot(x) + offset(me + ip);

      Scalar t1 = inf;
      Eigen::Index l = -1;
      for (Eigen::Index k = me; k < iq; ++k) {
        if (r(k) > Scalar(0)) {
          const Scalar ratio = u(k) / r(k);
          if (ratio < t1) {
            t1 = ratio;
            l = k;
          }
        }
      }
      const Scalar zn = z.dot(np);
      const bool primal_step = d.tail(n - iq).norm() > Scalar(settings.dependency_tol) * std::max(d.norm(), Scalar(1e-300));
      const Scalar t2 = primal_step ? -s_p / zn : inf;

      if (!primal_step && t1 == inf) {
        // np = N r with r_k <= 0 on inequalities: Farkas certificate.
        sol.certificate = Vector::Zero(me + mi);
        sol.certificate(me + ip) = Scalar(1);
        for (Eigen::Index k = 0; k < iq; ++k) {
          const Eigen::Index id = active[static_cast<std::size_t>(k)];
          sol.certificate(id) = id < me ? r(k) : -r(k);
        }
        return finish(QpStatus::Infeasible);
      }

      const Scalar t = std::min(t1, t2);
      if (primal_step) x += t * z;
      u.head(iq) -= t * r;
      u_p += t;

      if (primal_step && t == t2) {
        if (!gi.add(d, Scalar(settings.dependency_tol))) {
          // Numerically dependent: roll back and try another candidate.
          excluded[static_cast<std::size_t>(ip)] = 1;
          x = x_old;
          u = u_old;
          // Rebuild the factorization for the previous working set.
          gi = detail::GoldfarbIdnani<Scalar>(J0, std::min<Eigen::Index>(n, me + mi));
          active.clear();
          for (Eigen::Index k : active_old) {
            gi.directions(normal(k), d, z, r);
            gi.add(d, Scalar(settings.dependency_tol));
            active.push_back(k);
          }
          std::fill(is_active.begin(), is_active.end(), 0);
          for (Eigen::Index k : active)
            if (k >= me) is_active[static_cast<std::size_t>(k - me)] = 1;
          break;
        }
        Vector un(iq + 1);
        un.head(iq) = u.head(iq);
        un(iq) = u_p;
        u = un;
        active.push_back(me + ip);
        is_active[static_cast<std::size_t>(ip)] = 1;
        std::fill(excluded.begin(), excluded.end(), 0);
        break;
      }
      // Partial step: drop the blocking constraint l and retry ip.
      is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(l)] - me)] = 0;
      gi.remove(l);
      active.erase(active.begin() + l);
      Vector un(iq - 1);
      un.head(l) = u.head(l);
      un.tail(iq - 1 - l) = u.segment(l + 1, iq - 1 - l);
      u = un;
    }
  }
}

template <typename Scalar>
struct KktReport {
  Scalar stationarity = Scalar(0);
  Scalar primal = Scalar(0);
  Scalar complementarity = Scalar(0);
  Scalar dual = Scalar(0);
  /// For infeasible results: ||A' y|| (scaled) and the gap -b'y, which is > 0
  /// for a valid certificate.
  Scalar certificate_residual = Scalar(0);
  Scalar certificate_gap = Scalar(0);

  Scalar maxOptimalityResidual() const {
    return std::max(std::max(stationarity, primal), std::max(complementarity, dual));
  }
};

/// Independent residual check of a QP result. Residuals are scaled by
/// (1 + largest absolute problem datum).
template <typename Scalar>
KktReport<Scalar> checkKkt(const QpProblem<Scalar>& p, const QpSolution<Scalar>& sol) {
  using Vector = typename QpProblem<Scalar>::Vector;
  const Eigen::Index me = p.numEqualities();
  const Eigen::Index mi = p.numInequalities();

  Scalar scale = Scalar(1);
  auto grow = [&](const auto& m) {
    if (m.size() > 0) scale = std::max(scale, Scalar(1) + m.cwiseAbs().maxCoeff());
  };
  grow(p.H);
  grow(p.g);
  grow(p.A_eq);
  grow(p.b_eq);
  grow(p.A_in);
  grow(p.b_in);

  KktReport<Scalar> rep;
  if (sol.status == QpStatus::Infeasible) {
    const Vector& y = sol.certificate;
    Vector aty = Vector::Zero(p.numVariables());
    Scalar bty = Scalar(0);
    Scalar ymax = Scalar(0);
    if (me > 0) {
      aty += p.A_eq.transpose() * y.head(me);
      bty += p.b_eq.dot(y.head(me));
    }
    if (mi > 0) {
      aty += p.A_in.transpose() * y.tail(mi);
      bty += p.b_in.dot(y.tail(mi));
      rep.dual = std::max(Scalar(0), -y.tail(mi).minCoeff());
    }
    if (y.size() > 0) ymax = y.cwiseAbs().maxCoeff();
    rep.certificate_residual = aty.cwiseAbs().maxCoeff() / (scale * std::max(Scalar(1), ymax));
    rep.certificate_gap = -bty / std::max(Scalar(1), ymax);
    return rep;
  }

  const Vector& u = sol.u;
  Vector grad = p.H * u + p.g;
  if (me > 0) grad += p.A_eq.transpose() * sol.multipliers.head(me);
  if (mi > 0) grad += p.A_in.transpose() * sol.multipliers.tail(mi);
  const Scalar mult_scale =
      Scalar(1) + (sol.multipliers.size() > 0 ? sol.multipliers.cwiseAbs().maxCoeff() : Scalar(0));
  rep.stationarity = (grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : Scalar(0)) / (scale * mult_scale);
  if (me > 0) rep.primal = (p.A_eq * u - p.b_eq).cwiseAbs().maxCoeff() / scale;
  if (mi > 0) {
    const Vector viol = p.A_in * u - p.b_in;
    rep.primal = std::max(rep.primal, std::max(Scalar(0), viol.maxCoeff()) / scale);
    const Vector mu = sol.multipliers.tail(mi);
    rep.complementarity = mu.cwiseProduct(viol).cwiseAbs().maxCoeff() / (scale * mult_scale);
    rep.dual = std::max(Scalar(0), -mu.minCoeff());
  }
  return rep;
}

/// Plain-text dump: a header line "qp n me mi", then the blocks H, g, A_eq,
/// b_eq, A_in, b_in, each preceded by "<name> <rows> <cols>", values row-major,
/// one matrix row per line, written with 17 significant digits.
template <typename Scalar>
void writeQpDump(std::ostream& os, const QpProblem<Scalar>& p) {
  const auto old_prec = os.precision(17);
  os << "qp " << p.numVariables() << ' ' << p.numEqualities() << ' ' << p.numInequalities() << '\n';
  auto block = [&](const char* name, const auto& m, Eigen::Index rows, Eigen::Index cols) {
    os << name << ' ' << rows << ' ' << cols << '\n';
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) os << (j ? " " : "") << m(i, j);
      os << '\n';
    }
  };
  const Eigen::Index n = p.numVariables();
  block("H", p.H, n, n);
  block("g", p.g, p.g.size(), 1);
  block("A_eq", p.A_eq, p.numEqualities(), n);
  block("b_eq", p.b_eq, p.b_eq.size(), 1);
  block("A_in", p.A_in, p.numInequalities(), n);
  block("b_in", p.b_in, p.b_in.size(), 1);
  os.precision(old_prec);
}

template <typename Scalar>
QpProblem<Scalar> readQpDump(std::istream& is) {
  using Matrix = typename QpProblem<Scalar>::Matrix;
  std::string tag;
  Eigen::Index n = 0, me = 0, mi = 0;
  if (!(is >> tag >> n >> me >> mi) || tag != "qp") throw std::runtime_error("readQpDump: bad header");
  auto block = [&](const char* name) {
    std::string got;
    Eigen::Index rows = 0, cols = 0;
    if (!(is >> got >> rows >> cols) || got != name)
      throw std::runtime_error(std::string("readQpDump: expected block ") + name);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        if (!(is >> m(i, j))) throw std::runtime_error("readQpDump: truncated block");
    return m;
  };
  QpProblem<Scalar> p;
  p.H = block("H");
  p.g = block("g");
  p.A_eq = block("A_eq");
  p.b_eq = block("b_eq");
  p.A_in = block("A_in");
  p.b_in = block("b_in");
  if (p.A_eq.rows() == 0) p.A_eq.resize(0, n);
  if (p.A_in.rows() == 0) p.A_in.resize(0, n);
  p.checkDimensions();
  if (p.numEqualities() != me || p.numInequalities() != mi) throw std::runtime_error("readQpDump: header mismatch");
  return p;
}

using QpProblemd = QpProblem<double>;
using QpSolutiond = QpSolution<double>;

}  // namespace ismpc
