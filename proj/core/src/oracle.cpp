#include "idt/oracle.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "idt/errors.hpp"
#include "idt/synthloop.hpp"

namespace idt {

namespace {

constexpr long double kMassTolerance = 1e-15L;
constexpr long double kStationaryTolerance = 1e-12L;

/// Kahan-Babuska compensated accumulator.
class CompensatedSum {
public:
  void add(long double x) {
    const long double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  long double value() const { return sum_ + compensation_; }

private:
  long double sum_ = 0.0L;
  long double compensation_ = 0.0L;
};

long double entropy_bits(const std::vector<long double>& probs) {
  CompensatedSum h;
  for (long double p : probs) {
    if (p > 0.0L) {
      h.add(-p * std::log2(p));
    }
  }
  return h.value();
}

double clamp_artifact(long double x) {
  return static_cast<double>((x < 0.0L && x > -1e-12L) ? 0.0L : x);
}

}  // namespace

JointDistribution::JointDistribution(std::size_t states, std::size_t actions,
                                     std::size_t outcomes,
                                     std::vector<long double> table)
    : states_(states), actions_(actions), outcomes_(outcomes),
      table_(std::move(table)) {
  if (states_ == 0 || actions_ == 0 || outcomes_ == 0) {
    throw DistributionError("alphabet sizes must be positive");
  }
  const std::size_t cells = states_ * actions_ * outcomes_;
  if (cells > kOracleMaxCells) {
    throw DistributionError("table of " + std::to_string(cells) +
                            " cells exceeds the oracle cap of " +
                            std::to_string(kOracleMaxCells));
  }
  if (table_.size() != cells) {
    throw DistributionError("table size does not match alphabet sizes");
  }
  CompensatedSum mass;
  for (long double p : table_) {
    if (!(p >= 0.0L)) {
      throw DistributionError("probability table has a negative entry");
    }
    mass.add(p);
  }
  if (std::fabs(mass.value() - 1.0L) > kMassTolerance) {
    throw DistributionError("total mass is not 1");
  }
}

JointDistribution JointDistribution::merge_outcomes(std::size_t i,
                                                    std::size_t j) const {
  if (i >= outcomes_ || j >= outcomes_ || i == j) {
    throw DistributionError("invalid outcome symbols to merge");
  }
  std::vector<long double> merged = table_;
  for (std::size_t s = 0; s < states_; ++s) {
    for (std::size_t a = 0; a < actions_; ++a) {
      const std::size_t row = (s * actions_ + a) * outcomes_;
      merged[row + i] += merged[row + j];
      merged[row + j] = 0.0L;
    }
  }
  return JointDistribution(states_, actions_, outcomes_, std::move(merged));
}

WindowMetrics exact_metrics(const JointDistribution& d) {
  const std::size_t ns = d.states();
  const std::size_t na = d.actions();
  const std::size_t no = d.outcomes();

  std::vector<CompensatedSum> ps(ns), pa(na), po(no), psa(ns * na);
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t o = 0; o < no; ++o) {
        const long double p = d(s, a, o);
        ps[s].add(p);
        pa[a].add(p);
        po[o].add(p);
        psa[s * na + a].add(p);
      }
    }
  }
  auto values = [](const std::vector<CompensatedSum>& sums) {
    std::vector<long double> out;
    out.reserve(sums.size());
    for (const auto& x : sums) {
      out.push_back(x.value());
    }
    return out;
  };
  const auto p_s = values(ps);
  const auto p_a = values(pa);
  const auto p_o = values(po);
  const auto p_sa = values(psa);

  CompensatedSum mi, hf, hb;
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t a = 0; a < na; ++a) {
      const long double marg_sa = p_sa[s * na + a];
      for (std::size_t o = 0; o < no; ++o) {
        const long double p = d(s, a, o);
        if (p <= 0.0L) {
          continue;
        }
        // Differences of logs rather than logs of ratios: a ratio rounds to
        // ~1e-19 relative, which swamps log2 of arguments near 1.
        const long double lp = std::log2(p);
        const long double lsa = std::log2(marg_sa);
        const long double lo = std::log2(p_o[o]);
        mi.add(p * (lp - lsa - lo));
        hf.add(-p * (lp - lsa));
        hb.add(-p * (lp - lo));
      }
    }
  }

  const long double h_s = entropy_bits(p_s);
  const long double h_a = entropy_bits(p_a);
  const long double h_o = entropy_bits(p_o);
  const long double c = h_s + h_a + h_o;

  WindowMetrics m;
  m.h_s = static_cast<double>(h_s);
  m.h_a = static_cast<double>(h_a);
  m.h_snext = static_cast<double>(h_o);
  m.h_sa = static_cast<double>(entropy_bits(p_sa));
  m.h_joint = static_cast<double>(entropy_bits(d.table()));
  m.mi = clamp_artifact(mi.value());
  m.hf = clamp_artifact(hf.value());
  m.hb = clamp_artifact(hb.value());
  m.dh = m.hf - m.hb;
  m.c = static_cast<double>(c);
  if (c > 0.0L) {
    m.p = static_cast<double>(mi.value() / c);
    if (m.p < 0.0) {
      m.p = 0.0;
    }
  } else {
    m.flags.emplace_back(kFlagDegenerateDenominator);
  }
  return m;
}

std::vector<long double> stationary_states(const DiscreteLoopConfig& config) {
  config.validate();
  const std::size_t n = config.states;
  using Matrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

  Matrix chain = Matrix::Zero(static_cast<Eigen::Index>(n),
                              static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < config.actions; ++a) {
      const long double pa = config.pi(s, a);
      for (std::size_t sn = 0; sn < n; ++sn) {
        chain(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(sn)) +=
            pa * static_cast<long double>(config.k(s, a, sn));
      }
    }
  }

  // Irreducible iff every state reaches every other one.
  for (std::size_t start = 0; start < n; ++start) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> frontier{start};
    seen[start] = true;
    std::size_t reached = 1;
    while (!frontier.empty()) {
      const std::size_t u = frontier.back();
      frontier.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (!seen[v] && chain(static_cast<Eigen::Index>(u),
                              static_cast<Eigen::Index>(v)) > 0.0L) {
          seen[v] = true;
          ++reached;
          frontier.push_back(v);
        }
      }
    }
    if (reached != n) {
      throw OracleError("induced chain is reducible");
    }
  }

  // Solve pi (M - I) = 0 with the last balance equation replaced by
  // normalization.
  const auto en = static_cast<Eigen::Index>(n);
  Matrix system = chain.transpose() - Matrix::Identity(en, en);
  system.row(en - 1).setOnes();
  Vector rhs = Vector::Zero(en);
  rhs(en - 1) = 1.0L;
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) {
    throw OracleError("stationary system is singular");
  }
  Vector pi = lu.solve(rhs);

  long double total = 0.0L;
  for (Eigen::Index i = 0; i < en; ++i) {
    if (pi(i) < 0.0L) {
      if (pi(i) < -kStationaryTolerance) {
        throw OracleError("stationary solve produced a negative probability");
      }
      pi(i) = 0.0L;
    }
    total += pi(i);
  }
  pi /= total;
  const Vector residual = chain.transpose() * pi - pi;
  if (residual.cwiseAbs().maxCoeff() > kStationaryTolerance) {
    throw OracleError("stationary solve did not converge");
  }
  return {pi.data(), pi.data() + en};
}

JointDistribution stationary_joint(const DiscreteLoopConfig& config) {
  const std::vector<long double> pi = stationary_states(config);
  const std::size_t ns = config.states;
  const std::size_t na = config.actions;
  std::vector<long double> table(ns * na * ns, 0.0L);
  CompensatedSum total;
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t sn = 0; sn < ns; ++sn) {
        const long double p = pi[s] * static_cast<long double>(config.pi(s, a)) *
                              static_cast<long double>(config.k(s, a, sn));
        table[(s * na + a) * ns + sn] = p;
        total.add(p);
      }
    }
  }
  const long double mass = total.value();
  for (auto& p : table) {
    p /= mass;
  }
  return JointDistribution(ns, na, ns, std::move(table));
}

}  // namespace idt
