#include "imcf/reg_solver.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace imcf::solver {

void SolveConfig::validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("SolveConfig: epsilon must be > 0");
    if (!(lambda > 0.75 && lambda < 1.0))
        throw std::invalid_argument("SolveConfig: lambda must lie in (3/4, 1)");
    if (!continuation_steps.empty()) {
        for (size_t i = 1; i < continuation_steps.size(); ++i)
            if (!(continuation_steps[i] < continuation_steps[i - 1]))
                throw std::invalid_argument("SolveConfig: continuation steps must decrease");
        if (continuation_steps.back() != epsilon)
            throw std::invalid_argument("SolveConfig: last continuation step must equal epsilon");
    }
}

std::vector<double> SolveConfig::default_ladder(double eps) {
    std::vector<double> out;
    double e = 0.5;
    while (e > eps) { out.push_back(e); e *= 0.5; }
    out.push_back(eps);
    return out;
}

Barriers make_barriers(const geometry::DomainSpec& domain, const weights::WeightProfile& profile,
                       double delta, double lambda, double psi_max) {
    double half = profile.eval(0.5);
    double r_reg = domain.regular_radius;
    auto psi_delta = [=](double r) {
        double arg = std::min(r / delta, lambda);  // data pinned to the cutoff level set
        double v = profile.eval(arg);
        return std::min(v, psi_max);
    };
    Barriers b;
    b.lower = [=](Vec2 x) {
        double r = domain.signed_distance(x);
        double re = std::min(r, lambda * delta);
        return psi_delta(r) - half - (re / delta - 0.5);
    };
    b.upper = [=](Vec2 x) {
        double r = domain.signed_distance(x);
        return psi_delta(r) + std::min(r, lambda * delta) / r_reg;
    };
    return b;
}

// ---------------------------------------------------------------------------
// sparse matrix + ILU(0) + BiCGStab
// ---------------------------------------------------------------------------

void SparseMatrix::matvec(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n, 0.0);
    for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += vals[k] * x[cols[k]];
        y[r] = acc;
    }
}

namespace {

struct Ilu0 {
    std::vector<double> vals;
    std::vector<int> diag_pos;

    void factor(const SparseMatrix& A) {
        vals = A.vals;
        diag_pos.assign(A.n, -1);
        for (int r = 0; r < A.n; ++r)
            for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
                if (A.cols[k] == r) diag_pos[r] = k;
        for (int r = 0; r < A.n; ++r) {
            for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k) {
                int c = A.cols[k];
                if (c >= r) break;  // cols sorted
                double piv = vals[diag_pos[c]];
                if (piv == 0.0) piv = 1e-300;
                double m = vals[k] / piv;
                vals[k] = m;
                // subtract m * row(c) restricted to the sparsity of row r
                int kr = k + 1, kc = A.row_ptr[c];
                while (kr < A.row_ptr[r + 1] && kc < A.row_ptr[c + 1]) {
                    if (A.cols[kc] <= c) { ++kc; continue; }
                    if (A.cols[kr] < A.cols[kc]) ++kr;
                    else if (A.cols[kr] > A.cols[kc]) ++kc;
                    else { vals[kr] -= m * vals[kc]; ++kr; ++kc; }
                }
            }
        }
    }

    void apply(const SparseMatrix& A, const std::vector<double>& r, std::vector<double>& z) const {
        z = r;
        for (int i = 0; i < A.n; ++i) {
            double acc = z[i];
            for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1] && A.cols[k] < i; ++k)
                acc -= vals[k] * z[A.cols[k]];
            z[i] = acc;
        }
        for (int i = A.n - 1; i >= 0; --i) {
            double acc = z[i];
            for (int k = A.row_ptr[i + 1] - 1; k >= A.row_ptr[i] && A.cols[k] > i; --k)
                acc -= vals[k] * z[A.cols[k]];
            double piv = vals[diag_pos[i]];
            if (piv == 0.0) piv = 1e-300;
            z[i] = acc / piv;
        }
    }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Preconditioned BiCGStab; deterministic, returns achieved relative residual.
double bicgstab(const SparseMatrix& A, const Ilu0& M, const std::vector<double>& b,
                std::vector<double>& x, double tol, int max_iters) {
    int n = A.n;
    x.assign(n, 0.0);
    std::vector<double> r = b, r0 = b, p(n, 0.0), v(n, 0.0), s(n), t(n), z(n), y(n);
    double bn = norm2(b);
    if (bn == 0.0) return 0.0;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    double rn = norm2(r);
    for (int it = 0; it < max_iters && rn / bn > tol; ++it) {
        double rho1 = dot(r0, r);
        if (std::abs(rho1) < 1e-290) break;
        if (it == 0) p = r;
        else {
            double beta = (rho1 / rho) * (alpha / omega);
            for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho1;
        M.apply(A, p, y);
        A.matvec(y, v);
        double r0v = dot(r0, v);
        if (std::abs(r0v) < 1e-290) break;
        alpha = rho / r0v;
        for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (norm2(s) / bn <= tol) {
            for (int i = 0; i < n; ++i) x[i] += alpha * y[i];
            return norm2(s) / bn;
        }
        M.apply(A, s, z);
        A.matvec(z, t);
        double tt = dot(t, t);
        if (tt < 1e-290) break;
        omega = dot(t, s) / tt;
        for (int i = 0; i < n; ++i) x[i] += alpha * y[i] + omega * z[i];
        for (int i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
        rn = norm2(r);
        if (omega == 0.0) break;
    }
    return rn / bn;
}

// ---------------------------------------------------------------------------
// discretization
// ---------------------------------------------------------------------------

constexpr double kThetaMin = 0.1;

struct Assembly {
    const Grid* g = nullptr;
    const weights::WeightField* wf = nullptr;
    int ndim = 2;
    std::vector<double> psi;            // capped psi_delta at active nodes
    std::vector<std::uint8_t> active;   // node participates in the system
    std::vector<int> node_to_unknown;
    std::vector<int> unknown_nodes;

    void init(const Grid& grid, const weights::WeightField& weights) {
        g = &grid;
        wf = &weights;
        ndim = weights.n;
        int n = grid.num_nodes();
        psi.assign(n, 0.0);
        active.assign(n, 0);
        node_to_unknown.assign(n, -1);
        unknown_nodes.clear();
        double lam_cut = 1.0;
        for (int k = 0; k < n; ++k) {
            NodeClass c = grid.node_class[k];
            if (c == NodeClass::OUTSIDE) continue;
            active[k] = 1;
            double r = grid.r_domain[k];
            if (r > 0.0 && weights.delta > 0.0) {
                double arg = std::min(r / weights.delta, lam_cut * 0.999);
                // ring nodes carry the cutoff-level value; see solve_bvp
                psi[k] = std::min(weights.profile.eval(arg), weights.psi_max);
            }
            if (c == NodeClass::INTERIOR_PDE) {
                node_to_unknown[k] = static_cast<int>(unknown_nodes.size());
                unknown_nodes.push_back(k);
            }
        }
    }

    // pins psi on the ring to the cutoff level set value
    void clamp_ring_psi(double delta, double lambda) {
        if (delta <= 0.0) return;
        double v = std::min(wf->profile.eval(lambda), wf->psi_max);
        for (int k = 0; k < g->num_nodes(); ++k)
            if (g->node_class[k] == NodeClass::DIRICHLET_OUTER) psi[k] = v;
            else if (active[k] && g->r_domain[k] > 0.0) {
                double arg = std::min(g->r_domain[k] / delta, lambda);
                psi[k] = std::min(wf->profile.eval(arg), wf->psi_max);
            }
    }

    bool act(int i, int j) const { return g->in_bounds(i, j) && active[g->idx(i, j)] != 0; }
};

struct FaceStencil {
    std::array<int, 6> node;
    std::array<double, 6> gx, gy;
    int count = 0;

    void add(int n, double cx, double cy) {
        node[count] = n;
        gx[count] = cx;
        gy[count] = cy;
        ++count;
    }
};

// FULL: exact Newton linearization. PICARD: frozen-coefficient divergence,
// source kept in the residual but not linearized. DIV_ONLY: divergence part
// alone (residual and Jacobian), used by the symmetry checks.
enum class AsmMode { FULL, PICARD, DIV_ONLY };

struct SystemOutput {
    std::vector<double> residual;            // per unknown
    SparseMatrix* mat = nullptr;
    std::vector<double>* raw = nullptr;      // optional per-node raw residual
    bool scale_rows = true;                  // equilibrate by e^{-psi}
};

class Assembler {
  public:
    Assembler(const Assembly& a, const ScalarField& u, double eps, AsmMode mode)
        : a_(a), g_(*a.g), u_(u), eps_(eps), mode_(mode) {}

    void run(SystemOutput& out) {
        int nu = static_cast<int>(a_.unknown_nodes.size());
        out.residual.assign(nu, 0.0);
        if (out.mat) {
            build_sparsity(*out.mat);
            out.mat->vals.assign(out.mat->cols.size(), 0.0);
        }
        if (out.raw) out.raw->assign(g_.num_nodes(), std::nan(""));
        out_ = &out;

        for (int j = 0; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i) {
                if (i + 1 < g_.nx) face(i, j, i + 1, j, /*horizontal=*/true);
                if (j + 1 < g_.ny) face(i, j, i, j + 1, /*horizontal=*/false);
            }
        if (mode_ != AsmMode::DIV_ONLY)
            for (int r = 0; r < nu; ++r) source(r);

        for (int r = 0; r < nu; ++r) {
            if (out.raw) (*out.raw)[a_.unknown_nodes[r]] = out.residual[r];
            if (!out.scale_rows) continue;
            double sc = std::exp(-a_.psi[a_.unknown_nodes[r]]);
            out.residual[r] *= sc;
            if (out.mat)
                for (int k = out.mat->row_ptr[r]; k < out.mat->row_ptr[r + 1]; ++k)
                    out.mat->vals[k] *= sc;
        }
        if (out.mat) {
            out.mat->diag.assign(nu, 0.0);
            for (int r = 0; r < nu; ++r)
                for (int k = out.mat->row_ptr[r]; k < out.mat->row_ptr[r + 1]; ++k)
                    if (out.mat->cols[k] == r) out.mat->diag[r] = out.mat->vals[k];
        }
    }

  private:
    double w2_of(double psi) const {
        double e = std::exp(2.0 * psi / (a_.ndim - 1));
        return eps_ * eps_ * e;
    }

    void build_sparsity(SparseMatrix& m) {
        int nu = static_cast<int>(a_.unknown_nodes.size());
        m.n = nu;
        m.row_ptr.assign(nu + 1, 0);
        m.cols.clear();
        for (int r = 0; r < nu; ++r) {
            int k = a_.unknown_nodes[r];
            int i = k % g_.nx, j = k / g_.nx;
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    if (!g_.in_bounds(i + di, j + dj)) continue;
                    int un = a_.node_to_unknown[g_.idx(i + di, j + dj)];
                    if (un >= 0) m.cols.push_back(un);
                }
            std::sort(m.cols.begin() + m.row_ptr[r], m.cols.end());
            m.row_ptr[r + 1] = static_cast<int>(m.cols.size());
        }
    }

    void add_jac(int row_unknown, int col_unknown, double v) {
        SparseMatrix& m = *out_->mat;
        for (int k = m.row_ptr[row_unknown]; k < m.row_ptr[row_unknown + 1]; ++k)
            if (m.cols[k] == col_unknown) { m.vals[k] += v; return; }
        assert(false && "jacobian sparsity miss");
    }

    void face(int i0, int j0, int i1, int j1, bool horizontal) {
        int L = g_.idx(i0, j0), R = g_.idx(i1, j1);
        if (!a_.active[L] || !a_.active[R]) return;
        NodeClass cL = g_.node_class[L], cR = g_.node_class[R];
        bool uL = cL == NodeClass::INTERIOR_PDE, uR = cR == NodeClass::INTERIOR_PDE;
        if (!uL && !uR) return;

        bool e0L = cL == NodeClass::DIRICHLET_E0, e0R = cR == NodeClass::DIRICHLET_E0;
        if (e0L || e0R) { cut_face(L, R, e0R, horizontal); return; }

        double h = g_.h;
        FaceStencil st;
        if (horizontal) {
            st.add(L, -1.0 / h, 0.0);
            st.add(R, 1.0 / h, 0.0);
            tangential(st, i0, j0, i1, j1, /*ydir=*/true);
        } else {
            st.add(L, 0.0, -1.0 / h);
            st.add(R, 0.0, 1.0 / h);
            tangential(st, i0, j0, i1, j1, /*ydir=*/false);
        }

        double psif = 0.5 * (a_.psi[L] + a_.psi[R]);
        double Ef = std::exp(psif), w2 = w2_of(psif);
        double px = 0.0, py = 0.0;
        for (int k = 0; k < st.count; ++k) {
            px += st.gx[k] * u_.values[st.node[k]];
            py += st.gy[k] * u_.values[st.node[k]];
        }
        double D = std::sqrt(w2 + px * px + py * py);

        for (int k = 0; k < st.count; ++k) {
            int un = a_.node_to_unknown[st.node[k]];
            if (un < 0) continue;
            double pg = px * st.gx[k] + py * st.gy[k];
            out_->residual[un] -= Ef * pg / D;
            if (!out_->mat) continue;
            for (int l = 0; l < st.count; ++l) {
                int ul = a_.node_to_unknown[st.node[l]];
                if (ul < 0) continue;
                double gg = st.gx[k] * st.gx[l] + st.gy[k] * st.gy[l];
                double pl = px * st.gx[l] + py * st.gy[l];
                double v = (mode_ == AsmMode::PICARD)
                               ? -Ef * gg / D
                               : -Ef * (gg / D - pg * pl / (D * D * D));
                add_jac(un, ul, v);
            }
        }
    }

    // averaged central differences across the face, dropped one-sidedly where
    // the band ends
    void tangential(FaceStencil& st, int i0, int j0, int i1, int j1, bool ydir) {
        double h = g_.h;
        int cols_i[2] = {i0, i1}, cols_j[2] = {j0, j1};
        int avail = 0;
        struct Pair { int plus, minus; };
        Pair pr[2];
        for (int c = 0; c < 2; ++c) {
            int ip = cols_i[c] + (ydir ? 0 : 1), jp = cols_j[c] + (ydir ? 1 : 0);
            int im = cols_i[c] - (ydir ? 0 : 1), jm = cols_j[c] - (ydir ? 1 : 0);
            if (a_.act(ip, jp) && a_.act(im, jm)) {
                pr[avail++] = {g_.idx(ip, jp), g_.idx(im, jm)};
            }
        }
        if (avail == 0) return;
        double w = 1.0 / (avail * 2.0 * h);
        for (int c = 0; c < avail; ++c) {
            if (ydir) { st.add(pr[c].plus, 0.0, w); st.add(pr[c].minus, 0.0, -w); }
            else { st.add(pr[c].plus, w, 0.0); st.add(pr[c].minus, -w, 0.0); }
        }
    }

    // interface-interpolated Dirichlet: u = 0 imposed where the edge crosses
    // the E0 boundary, at distance theta*h from the interior node
    void cut_face(int L, int R, bool ghost_right, bool horizontal) {
        int I = ghost_right ? L : R;
        int G = ghost_right ? R : L;
        if (g_.node_class[I] != NodeClass::INTERIOR_PDE) return;
        double ri = g_.r_initial[I], rg = g_.r_initial[G];
        double theta = std::clamp(ri / (ri - rg), kThetaMin, 1.0);
        double h = g_.h;
        // gradient component along the axis, oriented L -> R
        double sgn = ghost_right ? -1.0 : 1.0;  // a = sgn * u_I / (theta h)
        double aval = sgn * u_.values[I] / (theta * h);
        double psif = 0.5 * (a_.psi[L] + a_.psi[R]);
        double Ef = std::exp(psif), w2 = w2_of(psif);
        double D = std::sqrt(w2 + aval * aval);
        double flux = Ef * aval / D;  // component along +axis
        int un = a_.node_to_unknown[I];
        // div contribution: +flux/h if the face is on the +side of I
        double side = ghost_right ? 1.0 : -1.0;
        out_->residual[un] += side * flux / h;
        if (out_->mat) {
            double dflux_da = (mode_ == AsmMode::PICARD) ? Ef / D : Ef * w2 / (D * D * D);
            double da_dui = sgn / (theta * h);
            add_jac(un, un, side * dflux_da * da_dui / h);
        }
        (void)horizontal;
    }

    // cut-aware second order one-dimensional derivative coefficients
    struct DirCoef {
        int nodes[2] = {-1, -1};   // plus, minus (unknown or Dirichlet), -1 = interface
        double c_plus = 0.0, c_minus = 0.0, c_self = 0.0;
        double value = 0.0;        // gradient component value
    };

    DirCoef dir_deriv(int i, int j, int di, int dj) const {
        double h = g_.h;
        int kc = g_.idx(i, j);
        auto probe = [&](int ii, int jj, double& d, double& val, int& nid) {
            if (!a_.act(ii, jj)) { d = -1.0; return; }
            int k = g_.idx(ii, jj);
            if (g_.node_class[k] == NodeClass::DIRICHLET_E0) {
                double ri = g_.r_initial[kc], rg = g_.r_initial[k];
                d = std::clamp(ri / (ri - rg), kThetaMin, 1.0) * h;
                val = 0.0;
                nid = -1;  // pinned at the interface, no column
            } else {
                d = h;
                val = u_.values[k];
                nid = k;
            }
        };
        double dp = -1.0, dm = -1.0, vp = 0.0, vm = 0.0;
        int np = -1, nm = -1;
        probe(i + di, j + dj, dp, vp, np);
        probe(i - di, j - dj, dm, vm, nm);
        double uc = u_.values[kc];
        DirCoef out;
        if (dp > 0.0 && dm > 0.0) {
            double denom = dp * dm * (dp + dm);
            out.c_plus = dm * dm / denom;
            out.c_minus = -dp * dp / denom;
            out.c_self = -(out.c_plus + out.c_minus);
            out.value = out.c_plus * vp + out.c_minus * vm + out.c_self * uc;
            out.nodes[0] = np;
            out.nodes[1] = nm;
        } else if (dp > 0.0) {
            out.c_plus = 1.0 / dp;
            out.c_self = -1.0 / dp;
            out.value = (vp - uc) / dp;
            out.nodes[0] = np;
        } else if (dm > 0.0) {
            out.c_minus = -1.0 / dm;
            out.c_self = 1.0 / dm;
            out.value = (uc - vm) / dm;
            out.nodes[1] = nm;
        }
        return out;
    }

    void source(int row) {
        int k = a_.unknown_nodes[row];
        int i = k % g_.nx, j = k / g_.nx;
        DirCoef dx = dir_deriv(i, j, 1, 0), dy = dir_deriv(i, j, 0, 1);
        double psin = a_.psi[k];
        double En = std::exp(psin), w2 = w2_of(psin);
        double D = std::sqrt(w2 + dx.value * dx.value + dy.value * dy.value);
        out_->residual[row] -= En * D;
        if (!out_->mat || mode_ == AsmMode::PICARD) return;
        auto add = [&](int nid, double coef, double gcomp) {
            if (nid < 0 || coef == 0.0) return;
            int un = a_.node_to_unknown[nid];
            if (un < 0) return;
            add_jac(row, un, -En * gcomp * coef / D);
        };
        add(dx.nodes[0], dx.c_plus, dx.value);
        add(dx.nodes[1], dx.c_minus, dx.value);
        add(dy.nodes[0], dy.c_plus, dy.value);
        add(dy.nodes[1], dy.c_minus, dy.value);
        add(k, dx.c_self, dx.value);
        add(k, dy.c_self, dy.value);
    }

    const Assembly& a_;
    const Grid& g_;
    const ScalarField& u_;
    double eps_;
    AsmMode mode_;
    SystemOutput* out_ = nullptr;
};

double linf(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

ResidualField assemble_residual(const ScalarField& u, const weights::WeightField& wf, double eps) {
    Assembly a;
    a.init(*u.grid, wf);
    SystemOutput out;
    std::vector<double> raw;
    out.raw = &raw;
    out.scale_rows = false;
    Assembler asmr(a, u, eps, AsmMode::FULL);
    asmr.run(out);
    ResidualField rf;
    rf.values = std::move(raw);
    rf.defined.assign(u.grid->num_nodes(), 0);
    for (int k : a.unknown_nodes) rf.defined[k] = 1;
    return rf;
}

JacobianSystem assemble_jacobian(const ScalarField& u, const weights::WeightField& wf, double eps,
                                 bool include_source) {
    Assembly a;
    a.init(*u.grid, wf);
    JacobianSystem js;
    SystemOutput out;
    out.mat = &js.mat;
    out.scale_rows = false;
    Assembler asmr(a, u, eps, include_source ? AsmMode::FULL : AsmMode::DIV_ONLY);
    asmr.run(out);
    js.unknown_nodes = a.unknown_nodes;
    js.node_to_unknown = a.node_to_unknown;
    return js;
}

SolveReport solve_bvp(const Grid& grid, const geometry::DomainSpec& domain,
                      const geometry::DomainSpec& initial, const weights::WeightField& wf,
                      const SolveConfig& cfg, const SolveOptions& opts) {
    (void)initial;
    auto t0 = std::chrono::steady_clock::now();
    cfg.validate();

    Assembly a;
    a.init(grid, wf);
    a.clamp_ring_psi(cfg.delta, cfg.lambda);

    Barriers bars = make_barriers(domain, wf.profile, cfg.delta, cfg.lambda, wf.psi_max);

    SolveReport rep;
    rep.field = ScalarField(grid);
    ScalarField& u = rep.field;

    int ring_nodes = 0;
    for (int k = 0; k < grid.num_nodes(); ++k) {
        if (!a.active[k]) continue;
        int i = k % grid.nx, j = k / grid.nx;
        Vec2 x = grid.point(i, j);
        u.defined[k] = 1;
        switch (grid.node_class[k]) {
            case NodeClass::DIRICHLET_E0:
                u.values[k] = 0.0;
                break;
            case NodeClass::DIRICHLET_OUTER: {
                std::optional<double> side;
                if (opts.side_dirichlet) side = opts.side_dirichlet(x);
                u.values[k] = side ? *side : bars.lower(x) - 2.0;
                ++ring_nodes;
                break;
            }
            default:
                if (opts.initial_guess && opts.initial_guess->grid == &grid &&
                    opts.initial_guess->defined[k])
                    u.values[k] = opts.initial_guess->values[k];
                else
                    u.values[k] = std::max(0.0, a.psi[k]);
        }
    }
    if (ring_nodes == 0) {
        rep.message = "empty outer Dirichlet ring";
        return rep;
    }

    std::vector<double> ladder =
        cfg.continuation_steps.empty() ? SolveConfig::default_ladder(cfg.epsilon)
                                       : cfg.continuation_steps;

    int nu = static_cast<int>(a.unknown_nodes.size());
    std::vector<double> delta_u(nu), trial(nu);
    SparseMatrix J;
    Ilu0 ilu;
    int total_newton = 0;
    bool ok = true;

    auto residual_of = [&](const ScalarField& field, double eps, std::vector<double>& out_r) {
        SystemOutput so;
        Assembler asr(a, field, eps, AsmMode::FULL);
        so.mat = nullptr;
        asr.run(so);
        out_r = std::move(so.residual);
    };

    for (size_t stage = 0; stage < ladder.size(); ++stage) {
        double eps = ladder[stage];
        bool last = stage + 1 == ladder.size();
        double res = 0.0;
        int it = 0;
        for (; it < cfg.max_newton_iters; ++it) {
            SystemOutput so;
            so.mat = &J;
            Assembler asr(a, u, eps, AsmMode::FULL);
            asr.run(so);
            res = linf(so.residual);
            rep.residual_history.push_back(res);
            if (res < cfg.newton_tol) break;

            std::vector<double> rhs(nu);
            for (int r = 0; r < nu; ++r) rhs[r] = -so.residual[r];
            ilu.factor(J);
            bicgstab(J, ilu, rhs, delta_u, cfg.linear_tol, cfg.linear_max_iters);

            // damped line search on the scaled residual
            double alpha = cfg.damping;
            bool accepted = false;
            ScalarField back = u;
            for (int ls = 0; ls < 9; ++ls, alpha *= 0.5) {
                for (int r = 0; r < nu; ++r)
                    u.values[a.unknown_nodes[r]] = back.values[a.unknown_nodes[r]] + alpha * delta_u[r];
                std::vector<double> rtrial;
                residual_of(u, eps, rtrial);
                if (linf(rtrial) < res) { accepted = true; break; }
            }
            if (!accepted) {
                u = back;
                // Picard fallback: frozen-coefficient steps
                for (int p = 0; p < cfg.picard_fallback_iters; ++p) {
                    SystemOutput po;
                    SparseMatrix Jp;
                    po.mat = &Jp;
                    Assembler pasr(a, u, eps, /*picard=*/true);
                    pasr.run(po);
                    std::vector<double> prhs(nu);
                    for (int r = 0; r < nu; ++r) prhs[r] = -po.residual[r];
                    ilu.factor(Jp);
                    bicgstab(Jp, ilu, prhs, delta_u, cfg.linear_tol, cfg.linear_max_iters);
                    double palpha = 1.0;
                    ScalarField pback = u;
                    for (int ls = 0; ls < 6; ++ls, palpha *= 0.5) {
                        for (int r = 0; r < nu; ++r)
                            u.values[a.unknown_nodes[r]] =
                                pback.values[a.unknown_nodes[r]] + palpha * delta_u[r];
                        std::vector<double> rtrial;
                        residual_of(u, eps, rtrial);
                        if (linf(rtrial) < res) break;
                        if (ls == 5) u = pback;
                    }
                }
            }
        }
        total_newton += it;
        if (res >= cfg.newton_tol && last) {
            ok = false;
            rep.message = "newton did not converge at target epsilon";
        }
        rep.residual_linf = res;
    }

    rep.newton_iters = total_newton;
    rep.converged = ok && rep.residual_linf < cfg.newton_tol;

    // C0 bounds (the approximating problem admits max{-eps, psi-C} <= u <= psi+C)
    double C = opts.bound_constant;
    if (C == 0.0) {
        for (int k : a.unknown_nodes) C = std::max(C, std::abs(u.values[k] - a.psi[k]));
        C = std::max(C, 1.0);
    }
    rep.bound_constant = C;
    int viol = 0;
    for (int k : a.unknown_nodes) {
        double lo = std::max(-cfg.epsilon - 1e-9, a.psi[k] - C - 1e-9);
        double hi = a.psi[k] + C + 1e-9;
        if (u.values[k] < lo || u.values[k] > hi) ++viol;
    }
    rep.bound_violations = viol;

    rep.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

RadialResult radial_solve(const std::function<double(double)>& f_profile, double r0, double r1,
                          double h, const SolveConfig& cfg, std::optional<double> right_value) {
    cfg.validate();
    int M = static_cast<int>(std::round((r1 - r0) / h));
    if (M < 4) throw std::invalid_argument("radial_solve: interval too short");
    double hh = (r1 - r0) / M;
    int n = cfg.n;

    std::vector<double> r(M + 1), fnode(M + 1), fface(M);
    for (int k = 0; k <= M; ++k) {
        r[k] = r0 + k * hh;
        fnode[k] = f_profile(r[k]);
        if (!(fnode[k] > 0.0))
            throw std::invalid_argument("radial_solve: warp factor must be positive");
    }
    for (int k = 0; k < M; ++k) {
        fface[k] = f_profile(r[k] + 0.5 * hh);
        if (!(fface[k] > 0.0))
            throw std::invalid_argument("radial_solve: warp factor must be positive");
    }

    double uR = right_value ? *right_value : (n - 1) * std::log(fnode[M] / fnode[0]);

    RadialResult out;
    out.r = r;
    out.u.assign(M + 1, 0.0);
    // maximal-branch initial guess
    for (int k = 0; k <= M; ++k) out.u[k] = (n - 1) * std::log(fnode[k] / fnode[0]);
    out.u[M] = uR;
    std::vector<double>& u = out.u;

    std::vector<double> ladder =
        cfg.continuation_steps.empty() ? SolveConfig::default_ladder(cfg.epsilon)
                                       : cfg.continuation_steps;

    int nuk = M - 1;
    std::vector<double> F(M), R(nuk), dl(nuk), dm(nuk), du(nuk), rhs(nuk);

    auto assemble = [&](double eps, bool with_jac) -> double {
        double wpow = n - 1;
        for (int k = 0; k < M; ++k) {
            double a = (u[k + 1] - u[k]) / hh;
            F[k] = a / std::sqrt(eps * eps + a * a);
        }
        double res = 0.0;
        for (int k = 1; k < M; ++k) {
            double fw = std::pow(fface[k - 1], wpow), fe = std::pow(fface[k], wpow);
            double fc = std::pow(fnode[k], wpow);
            double g = (u[k + 1] - u[k - 1]) / (2.0 * hh);
            double S = std::sqrt(eps * eps + g * g);
            double Rk = (fe * F[k] - fw * F[k - 1]) / (hh * fc) - S;
            R[k - 1] = Rk;
            res = std::max(res, std::abs(Rk));
            if (!with_jac) continue;
            auto dF = [&](int kk) {
                double a = (u[kk + 1] - u[kk]) / hh;
                double D = std::sqrt(eps * eps + a * a);
                return (eps * eps) / (D * D * D) / hh;  // dF/du_{kk+1}
            };
            double dFe = dF(k), dFw = dF(k - 1);
            double dS = (S > 0.0) ? g / S / (2.0 * hh) : 0.0;
            dm[k - 1] = (fe * (-dFe) - fw * (dFw)) / (hh * fc);
            du[k - 1] = (fe * dFe) / (hh * fc) - dS;
            dl[k - 1] = (fw * dFw) / (hh * fc) + dS;
        }
        return res;
    };

    int total = 0;
    bool ok = true;
    for (size_t stage = 0; stage < ladder.size(); ++stage) {
        double eps = ladder[stage];
        double res = 0.0;
        int it = 0;
        for (; it < cfg.max_newton_iters; ++it) {
            res = assemble(eps, true);
            if (res < cfg.newton_tol) break;
            for (int k = 0; k < nuk; ++k) rhs[k] = -R[k];
            // Thomas
            std::vector<double> cp(nuk), dp(nuk);
            double m0 = dm[0];
            cp[0] = du[0] / m0;
            dp[0] = rhs[0] / m0;
            for (int k = 1; k < nuk; ++k) {
                double m = dm[k] - dl[k] * cp[k - 1];
                cp[k] = du[k] / m;
                dp[k] = (rhs[k] - dl[k] * dp[k - 1]) / m;
            }
            std::vector<double> d(nuk);
            d[nuk - 1] = dp[nuk - 1];
            for (int k = nuk - 2; k >= 0; --k) d[k] = dp[k] - cp[k] * d[k + 1];

            double alpha = cfg.damping;
            std::vector<double> back(u);
            bool accepted = false;
            for (int ls = 0; ls < 12; ++ls, alpha *= 0.5) {
                for (int k = 1; k < M; ++k) u[k] = back[k] + alpha * d[k - 1];
                if (assemble(eps, false) < res) { accepted = true; break; }
            }
            if (!accepted) { u = back; break; }
        }
        total += it;
        if (stage + 1 == ladder.size()) {
            out.residual_linf = assemble(eps, false);
            ok = out.residual_linf < cfg.newton_tol;
        }
    }
    out.newton_iters = total;
    out.converged = ok;
    if (!ok) out.message = "radial newton did not converge";
    return out;
}

}  // namespace imcf::solver
