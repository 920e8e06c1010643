#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "vpsim/dirac.hpp"

namespace vpsim {

// Instantaneous eigenbasis of H(tau) per slice. Mode columns are stored
// orthonormal under the dx-weighted inner product, so
// inner_product_3d(chi_j, chi_k) = delta_jk to round-off. Mode identity is
// preserved across slices by max-overlap assignment, with orthogonal
// Procrustes alignment inside quasi-degenerate clusters; after matching,
// <chi_j(tau)|chi_j(tau+dtau)> has non-negative real part.
struct ModeBasis {
  SpacetimeGrid grid;
  MassParameter mass;
  int retained = 0;
  std::vector<Eigen::VectorXd> energies;  // per slice, size retained
  std::vector<Eigen::MatrixXcd> modes;    // per slice, 4 n_x x retained
  std::vector<int> flagged_slices;        // continuity matching ambiguous

  SpinorSlice mode_slice(int s, int j) const {
    SpinorSlice sl(grid, s);
    Eigen::Map<Eigen::VectorXcd>(sl.values.data(), sl.values.size()) =
        modes[size_t(s)].col(j);
    return sl;
  }

  // <chi_j | gamma^0 | chi_k> at slice s, all pairs
  Eigen::MatrixXcd gamma0_elements(int s) const {
    static const GammaSet gm = build_gamma_set();
    const Eigen::MatrixXcd& V = modes[size_t(s)];
    Eigen::MatrixXcd g0v = V;
    for (int i = 0; i < grid.n_x; ++i)
      g0v.middleRows<4>(4 * i) = gm[0] * V.middleRows<4>(4 * i);
    return grid.dx * (V.adjoint() * g0v);
  }
};

struct EigenSolveOptions {
  int retained = -1;          // -1: keep the full discrete spectrum
  double degeneracy_tol = 1e-8;  // cluster width in units of m
  double match_floor = 0.7;   // post-alignment overlap below this flags a slice
};

// Solves H(tau) chi = E chi on every slice and tracks mode identity.
// If opts.retained > 0, keeps the modes with the largest initial overlap
// against `reference` (which must then be non-null).
inline ModeBasis solve_instantaneous(const SpacetimeGrid& grid, const Potential& pot,
                                     const MassParameter& mass,
                                     const EigenSolveOptions& opts = {},
                                     const SpinorSlice* reference = nullptr) {
  grid.validate();
  require(grid.n_x >= 3, "grid too small for stencil (need >= 3 sites along x)");
  const int full = 4 * grid.n_x;
  const int keep = opts.retained > 0 ? std::min(opts.retained, full) : full;
  require(keep == full || reference != nullptr,
          "solve_instantaneous: top-K retention needs a reference slice");

  ModeBasis basis;
  basis.grid = grid;
  basis.mass = mass;
  basis.retained = keep;
  basis.energies.resize(size_t(grid.n_t));
  basis.modes.resize(size_t(grid.n_t));

  const double deg_tol = opts.degeneracy_tol * mass.m;

  // persistent quasi-degenerate groups (partition of mode slots)
  std::vector<std::vector<int>> groups;
  std::vector<int> group_birth;

  for (int s = 0; s < grid.n_t; ++s) {
    Eigen::MatrixXcd H = hamiltonian_matrix(grid, pot, mass, s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    require(es.info() == Eigen::Success, "eigen-solve failed");
    Eigen::VectorXd ev = es.eigenvalues();
    Eigen::MatrixXcd V = es.eigenvectors() / std::sqrt(grid.dx);

    if (s == 0) {
      // Degenerate clusters of the first slice have an arbitrary internal
      // basis; adapt them to the time-averaged Hamiltonian (degenerate
      // perturbation theory) so that later splits arrive aligned instead of
      // jumping. H is linear in the potential, so the average is H of the
      // time-averaged potential.
      {
        Potential mean_pot = pot;
        for (int c = 0; c < 4; ++c) {
          if (mean_pot.a[c].empty()) continue;
          for (int i = 0; i < grid.n_x; ++i) {
            double acc = 0;
            for (int t = 0; t < grid.n_t; ++t)
              acc += pot.a[c][size_t(grid.site(t, i))];
            acc /= grid.n_t;
            for (int t = 0; t < grid.n_t; ++t)
              mean_pot.a[c][size_t(grid.site(t, i))] = acc;
          }
        }
        Eigen::MatrixXcd Hbar = hamiltonian_matrix(grid, mean_pot, mass, 0);
        int c0 = 0;
        while (c0 < full) {
          int c1 = c0 + 1;
          while (c1 < full && ev(c1) - ev(c1 - 1) < deg_tol) ++c1;
          if (c1 - c0 > 1) {
            Eigen::MatrixXcd Vc = V.middleCols(c0, c1 - c0);
            Eigen::MatrixXcd P = Vc.adjoint() * (Hbar * Vc) * grid.dx;
            P = 0.5 * (P + P.adjoint()).eval();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> sub(P);
            V.middleCols(c0, c1 - c0) = Vc * sub.eigenvectors();
          }
          c0 = c1;
        }
      }
      if (keep == full) {
        basis.energies[0] = ev;
        basis.modes[0] = V;
      } else {
        // top-K by overlap with the reference slice
        Eigen::Map<const Eigen::VectorXcd> ref(reference->values.data(),
                                               reference->values.size());
        Eigen::VectorXcd ov = V.adjoint() * ref * grid.dx;
        std::vector<int> idx(static_cast<size_t>(full));
        for (int k = 0; k < full; ++k) idx[size_t(k)] = k;
        std::partial_sort(idx.begin(), idx.begin() + keep, idx.end(),
                          [&](int a, int b) {
                            return std::norm(ov(a)) > std::norm(ov(b));
                          });
        std::sort(idx.begin(), idx.begin() + keep);  // stable energy order
        basis.energies[0].resize(keep);
        basis.modes[0].resize(full, keep);
        for (int k = 0; k < keep; ++k) {
          basis.energies[0](k) = ev(idx[size_t(k)]);
          basis.modes[0].col(k) = V.col(idx[size_t(k)]);
        }
      }
      // fix the overall phase of the first slice deterministically: largest
      // component real-positive
      for (int k = 0; k < keep; ++k) {
        int imax = 0;
        double wmax = 0;
        for (int r = 0; r < full; ++r)
          if (std::norm(basis.modes[0](r, k)) > wmax) {
            wmax = std::norm(basis.modes[0](r, k));
            imax = r;
          }
        cplx z = basis.modes[0](imax, k);
        if (std::abs(z) > 0) basis.modes[0].col(k) *= std::conj(z) / std::abs(z);
      }
      // initial degenerate groups (slots are energy-sorted here)
      int b0 = 0;
      while (b0 < keep) {
        int b1 = b0 + 1;
        while (b1 < keep &&
               basis.energies[0](b1) - basis.energies[0](b1 - 1) < deg_tol)
          ++b1;
        std::vector<int> grp;
        for (int j = b0; j < b1; ++j) grp.push_back(j);
        groups.push_back(std::move(grp));
        group_birth.push_back(0);
        b0 = b1;
      }
      continue;
    }

    const Eigen::MatrixXcd& Vp = basis.modes[size_t(s - 1)];

    // Current spectrum as value-clusters with an availability basis per
    // cluster. Assignment is subspace-wise: each tracked group captures the
    // best-aligned directions inside a cluster (SVD of the overlap block),
    // and consumed directions leave the availability pool. Single-column
    // assignment would lose the subspace whenever only part of a degenerate
    // cluster is retained.
    struct AvailCluster {
      double energy;
      Eigen::MatrixXcd cols;
    };
    std::vector<AvailCluster> avail;
    {
      int a0 = 0;
      while (a0 < full) {
        int a1 = a0 + 1;
        while (a1 < full && ev(a1) - ev(a1 - 1) < deg_tol) ++a1;
        avail.push_back(
            {ev.segment(a0, a1 - a0).mean(), V.middleCols(a0, a1 - a0)});
        a0 = a1;
      }
    }

    Eigen::VectorXd e_new(keep);
    Eigen::MatrixXcd v_new(full, keep);
    for (auto& G : groups) {
      std::vector<int> remaining = G;
      while (!remaining.empty()) {
        Eigen::MatrixXcd Vrem(full, remaining.size());
        for (size_t a = 0; a < remaining.size(); ++a)
          Vrem.col(Eigen::Index(a)) = Vp.col(remaining[a]);
        int best_c = -1;
        double best_w = -1;
        for (size_t c = 0; c < avail.size(); ++c) {
          if (avail[c].cols.cols() == 0) continue;
          double w = (Vrem.adjoint() * avail[c].cols * grid.dx).squaredNorm() /
                     double(std::min<Eigen::Index>(avail[c].cols.cols(),
                                                   Eigen::Index(remaining.size())));
          if (w > best_w) {
            best_w = w;
            best_c = int(c);
          }
        }
        AvailCluster& C = avail[size_t(best_c)];
        Eigen::MatrixXcd O = Vrem.adjoint() * C.cols * grid.dx;
        const int r = int(std::min<Eigen::Index>(Eigen::Index(remaining.size()),
                                                 C.cols.cols()));
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
            O, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::MatrixXcd taken = C.cols * svd.matrixV().leftCols(r);
        Eigen::MatrixXcd leftover =
            C.cols * svd.matrixV().rightCols(C.cols.cols() - r);
        // slots best captured by this cluster (stable slot order)
        std::vector<size_t> rows(remaining.size());
        for (size_t a = 0; a < rows.size(); ++a) rows[a] = a;
        std::stable_sort(rows.begin(), rows.end(), [&](size_t a, size_t b) {
          return O.row(Eigen::Index(a)).squaredNorm() >
                 O.row(Eigen::Index(b)).squaredNorm();
        });
        rows.resize(size_t(r));
        std::sort(rows.begin(), rows.end());
        for (int a = 0; a < r; ++a) {
          int slot = remaining[rows[size_t(a)]];
          v_new.col(slot) = taken.col(a);
          e_new(slot) = C.energy;
        }
        C.cols = leftover;
        std::vector<int> next_remaining;
        for (size_t a = 0; a < remaining.size(); ++a)
          if (std::find(rows.begin(), rows.end(), a) == rows.end())
            next_remaining.push_back(remaining[a]);
        remaining = std::move(next_remaining);
      }
    }

    // Track each persistent quasi-degenerate group. While a group stays
    // degenerate its internal basis is gauge; Procrustes alignment keeps it
    // continuous. When a group splits, the newly resolved eigendirections
    // are authoritative, so the group's history (back to its birth slice)
    // is rotated onto them.
    std::vector<std::vector<int>> next_groups;
    std::vector<int> next_birth;
    for (size_t gi = 0; gi < groups.size(); ++gi) {
      std::vector<int> slots = groups[gi];
      std::sort(slots.begin(), slots.end(),
                [&](int a, int b) { return e_new(a) < e_new(b); });
      // subclusters of this group at the current slice
      std::vector<std::vector<int>> subs;
      size_t a0 = 0;
      while (a0 < slots.size()) {
        size_t a1 = a0 + 1;
        while (a1 < slots.size() &&
               e_new(slots[a1]) - e_new(slots[a1 - 1]) < deg_tol)
          ++a1;
        subs.emplace_back(slots.begin() + a0, slots.begin() + a1);
        a0 = a1;
      }

      const bool split = subs.size() > 1;
      if (split && slots.size() > 1) {
        // rotate the group's history onto the resolved directions
        const int d = int(slots.size());
        Eigen::MatrixXcd Pc(full, d), Vc(full, d);
        for (int a = 0; a < d; ++a) {
          Pc.col(a) = Vp.col(slots[size_t(a)]);
          Vc.col(a) = v_new.col(slots[size_t(a)]);
        }
        Eigen::MatrixXcd B = Pc.adjoint() * Vc * grid.dx;
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
            B, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::MatrixXcd R = svd.matrixU() * svd.matrixV().adjoint();
        for (int t = group_birth[gi]; t < s; ++t) {
          Eigen::MatrixXcd hist(full, d);
          for (int a = 0; a < d; ++a)
            hist.col(a) = basis.modes[size_t(t)].col(slots[size_t(a)]);
          hist = hist * R;
          for (int a = 0; a < d; ++a)
            basis.modes[size_t(t)].col(slots[size_t(a)]) = hist.col(a);
        }
      }

      // align each (sub)group to the previous slice
      for (auto& sg : subs) {
        const int d = int(sg.size());
        if (d == 1) {
          int j = sg[0];
          cplx z = (basis.modes[size_t(s - 1)].col(j).adjoint() *
                    v_new.col(j))(0) * grid.dx;
          if (std::abs(z) > 0) v_new.col(j) *= std::conj(z) / std::abs(z);
        } else {
          Eigen::MatrixXcd Vc(full, d), Pc(full, d);
          for (int a = 0; a < d; ++a) {
            Vc.col(a) = v_new.col(sg[size_t(a)]);
            Pc.col(a) = basis.modes[size_t(s - 1)].col(sg[size_t(a)]);
          }
          Eigen::MatrixXcd B = Vc.adjoint() * Pc * grid.dx;
          Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
              B, Eigen::ComputeFullU | Eigen::ComputeFullV);
          Eigen::MatrixXcd U = svd.matrixU() * svd.matrixV().adjoint();
          Vc = Vc * U;
          for (int a = 0; a < d; ++a) v_new.col(sg[size_t(a)]) = Vc.col(a);
        }
        next_groups.push_back(sg);
        next_birth.push_back(split ? s : group_birth[gi]);
      }
    }
    groups = std::move(next_groups);
    group_birth = std::move(next_birth);

    basis.energies[size_t(s)] = e_new;
    basis.modes[size_t(s)] = v_new;
  }

  // crossing / ambiguity detection on the final aligned sequence
  for (int s = 0; s + 1 < grid.n_t; ++s) {
    double worst = 1.0;
    for (int j = 0; j < keep; ++j)
      worst = std::min(worst, std::abs((basis.modes[size_t(s)].col(j).adjoint() *
                                        basis.modes[size_t(s + 1)].col(j))(0)) *
                                  grid.dx);
    if (worst < opts.match_floor) basis.flagged_slices.push_back(s + 1);
  }
  return basis;
}

// Phase-evolved Dirac basis psi_j(t, x; t_i) = chi_j(t - t_i, x)
// exp(-i Phi_j(t)) with Phi_j(t) = int_0^t E_j(t' - t_i) dt'. The basis
// samples E_j on the grid's slices; before the first slice H is taken
// constant at its initial value, so the pre-grid part contributes
// E_j(first slice) * origin_t.
struct PhasedBasis {
  ModeBasis base;
  double t_i = 0.0;
  std::vector<Eigen::VectorXd> phase;  // Phi_j at each slice

  SpinorSlice mode_slice(int s, int j) const {
    SpinorSlice sl = base.mode_slice(s, j);
    cplx ph = std::exp(-I * phase[size_t(s)](j));
    for (auto& v : sl.values) v *= ph;
    return sl;
  }
};

inline PhasedBasis build_phased_basis(ModeBasis basis, double t_i,
                                      double max_phase_step = PI / 2) {
  PhasedBasis pb;
  pb.t_i = t_i;
  pb.phase.resize(basis.energies.size());
  const double dt = basis.grid.dt;
  const int n_t = basis.grid.n_t;
  double e_max = 0;
  for (int s = 0; s < n_t; ++s)
    e_max = std::max(e_max, basis.energies[size_t(s)].cwiseAbs().maxCoeff());
  require(e_max * dt < max_phase_step,
          "build_phased_basis: dt too coarse for the spectral content");

  pb.phase[0] = basis.energies[0] * basis.grid.origin_t;
  for (int s = 1; s < n_t; ++s)
    pb.phase[size_t(s)] =
        pb.phase[size_t(s - 1)] +
        0.5 * dt * (basis.energies[size_t(s - 1)] + basis.energies[size_t(s)]);
  pb.base = std::move(basis);
  return pb;
}

// Coefficients C_j(t) = <psi_j(t)|psi(t)> and initial weights Y_j.
struct CoefficientTrack {
  Eigen::MatrixXcd coeff;      // n_t x retained
  Eigen::VectorXd residual;    // per-slice norm of psi - sum C_j psi_j
  Eigen::VectorXd completeness;  // per-slice sum_j |C_j|^2
  Eigen::VectorXd weights;     // Y_j = |C_j|^2 at the slice nearest t_i

  int n_slices() const { return int(coeff.rows()); }
  int n_modes() const { return int(coeff.cols()); }
};

inline CoefficientTrack project_coefficients(const SpinorField& psi,
                                             const PhasedBasis& pb) {
  const SpacetimeGrid& g = psi.grid;
  require(g.same_shape(pb.base.grid), "project_coefficients: grid mismatch");
  const int keep = pb.base.retained;
  CoefficientTrack track;
  track.coeff.resize(g.n_t, keep);
  track.residual.resize(g.n_t);
  track.completeness.resize(g.n_t);

  for (int s = 0; s < g.n_t; ++s) {
    Eigen::Map<const Eigen::VectorXcd> v(psi.at(s, 0), size_t(g.n_x) * 4);
    Eigen::VectorXcd c = pb.base.modes[size_t(s)].adjoint() * v * g.dx;
    for (int j = 0; j < keep; ++j)
      c(j) *= std::exp(I * pb.phase[size_t(s)](j));
    track.coeff.row(s) = c.transpose();
    double n2 = v.squaredNorm() * g.dx;
    double c2 = c.squaredNorm();
    track.completeness(s) = c2;
    track.residual(s) = std::sqrt(std::max(0.0, n2 - c2));
  }

  int s_i = int(std::lround((pb.t_i - g.origin_t) / g.dt));
  s_i = std::clamp(s_i, 0, g.n_t - 1);
  track.weights =
      track.coeff.row(s_i).cwiseAbs2().transpose();
  return track;
}

// psi(t) = sum_j c_j(t) psi_j(t) for given coefficient tracks (n_t x retained)
inline SpinorField synthesize_field(const PhasedBasis& pb,
                                    const Eigen::MatrixXcd& coeff) {
  const SpacetimeGrid& g = pb.base.grid;
  require(int(coeff.rows()) == g.n_t && int(coeff.cols()) == pb.base.retained,
          "synthesize_field: coefficient shape mismatch");
  SpinorField psi(g);
  for (int s = 0; s < g.n_t; ++s) {
    Eigen::VectorXcd c = coeff.row(s).transpose();
    for (int j = 0; j < pb.base.retained; ++j)
      c(j) *= std::exp(-I * pb.phase[size_t(s)](j));
    Eigen::Map<Eigen::VectorXcd>(psi.at(s, 0), size_t(g.n_x) * 4) =
        pb.base.modes[size_t(s)] * c;
  }
  return psi;
}

// max over j, k, tau of |<chi_k | d_tau chi_j>| / m with finite-difference
// d_tau; the caller compares against its adiabaticity bound (rates must be
// small compared to m).
inline double check_adiabaticity(const ModeBasis& basis) {
  require(basis.grid.n_t >= 2, "check_adiabaticity: need at least 2 slices");
  double worst = 0.0;
  for (int s = 0; s + 1 < basis.grid.n_t; ++s) {
    Eigen::MatrixXcd D =
        basis.modes[size_t(s)].adjoint() *
        (basis.modes[size_t(s + 1)] - basis.modes[size_t(s)]) * basis.grid.dx /
        basis.grid.dt;
    worst = std::max(worst, D.cwiseAbs().maxCoeff());
  }
  return worst / basis.mass.m;
}

}  // namespace vpsim
