#include "learners.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "common.hpp"

namespace ivmed {

namespace {

constexpr double kCoefTol = 1e-7;   // stop when max coefficient change is below this
constexpr int kMaxSweeps = 10000;   // hard cap on coordinate-descent sweeps per lambda

bool is_constant(const std::vector<double>& y) {
    for (double v : y) {
        if (v != y.front()) return false;
    }
    return true;
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

std::uint64_t fnv1a(const unsigned char* bytes, std::size_t len, std::uint64_t h) {
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_row(const DesignMatrix& x, double y, std::size_t i, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(seed);
    const unsigned char* row = reinterpret_cast<const unsigned char*>(&x.data[i * x.cols]);
    h = fnv1a(row, x.cols * sizeof(double), h);
    h = fnv1a(reinterpret_cast<const unsigned char*>(&y), sizeof(double), h);
    return mix64(h);
}

// Identical design rows collapse to one weighted cell with the outcome mean
// as sufficient statistic; binary designs have at most 2^#base cells, which
// turns the O(n) fitting passes into O(#cells) ones. Exactly equivalent to
// row-level fitting for every estimator below.
struct CellData {
    DesignMatrix x;
    std::vector<double> wgt;    // multiplicities
    std::vector<double> ymean;  // per-cell outcome mean
    double total = 0.0;
};

CellData collapse_rows(const DesignMatrix& x, const std::vector<double>& y) {
    std::unordered_map<std::uint64_t, std::size_t> index;
    index.reserve(64);
    CellData cells;
    cells.x.cols = x.cols;
    cells.x.names = x.names;
    std::vector<double> ysum;
    for (std::size_t i = 0; i < x.rows; ++i) {
        std::uint64_t h = fnv1a(reinterpret_cast<const unsigned char*>(&x.data[i * x.cols]),
                                x.cols * sizeof(double), 0xcbf29ce484222325ULL);
        auto it = index.find(h);
        std::size_t c;
        if (it == index.end()) {
            c = cells.wgt.size();
            index.emplace(h, c);
            cells.x.data.insert(cells.x.data.end(), &x.data[i * x.cols],
                                &x.data[(i + 1) * x.cols]);
            cells.wgt.push_back(0.0);
            ysum.push_back(0.0);
            cells.wgt[c] += 1.0;
            ysum[c] += y[i];
            continue;
        }
        c = it->second;
        if (std::memcmp(&cells.x.data[c * x.cols], &x.data[i * x.cols],
                        x.cols * sizeof(double)) != 0) {
            // hash collision between distinct rows: keep one row per cell
            CellData raw;
            raw.x = x;
            raw.wgt.assign(x.rows, 1.0);
            raw.ymean = y;
            raw.total = static_cast<double>(x.rows);
            return raw;
        }
        cells.wgt[c] += 1.0;
        ysum[c] += y[i];
    }
    cells.x.rows = cells.wgt.size();
    cells.ymean.resize(cells.wgt.size());
    for (std::size_t c = 0; c < cells.wgt.size(); ++c) cells.ymean[c] = ysum[c] / cells.wgt[c];
    cells.total = static_cast<double>(x.rows);
    return cells;
}

struct Standardization {
    std::vector<double> mean;
    std::vector<double> sd;
    std::vector<char> active;  // sd > 0
};

// weighted mean/sd standardization in place
Standardization standardize_columns(DesignMatrix& x, const std::vector<double>& wgt,
                                    double total) {
    Standardization s;
    s.mean.assign(x.cols, 0.0);
    s.sd.assign(x.cols, 0.0);
    s.active.assign(x.cols, 0);
    for (std::size_t j = 0; j < x.cols; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) m += wgt[i] * x.at(i, j);
        m /= total;
        double v = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            double d = x.at(i, j) - m;
            v += wgt[i] * d * d;
        }
        double sd = std::sqrt(v / total);
        s.mean[j] = m;
        s.sd[j] = sd;
        if (sd > 0.0) {
            s.active[j] = 1;
            for (std::size_t i = 0; i < x.rows; ++i) x.at(i, j) = (x.at(i, j) - m) / sd;
        } else {
            for (std::size_t i = 0; i < x.rows; ++i) x.at(i, j) = 0.0;
        }
    }
    return s;
}

// weighted binomial NLL; the fractional per-cell outcome mean is sufficient
double binomial_nll(const std::vector<double>& eta, const std::vector<double>& ymean,
                    const std::vector<double>& wgt, double total) {
    double s = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
        double e = eta[i];
        double softplus = (e > 30.0) ? e : (e < -30.0 ? 0.0 : std::log1p(std::exp(e)));
        s += wgt[i] * (softplus - ymean[i] * e);
    }
    return s / total;
}

double l1_norm_active(const std::vector<double>& beta, const std::vector<char>& active) {
    double s = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) {
        if (active[j]) s += std::fabs(beta[j]);
    }
    return s;
}

// One lasso solution path over a decreasing lambda grid, warm-started, on an
// already standardized weighted design. Covariance updates make a coordinate
// sweep O(p^2). Binomial wraps the quadratic solves in IRLS with a
// backtracking safeguard so the true penalized objective never increases
// across recorded sweeps; gaussian is exact cyclic CD. Sweeps alternate
// between the active set and full verification passes.
struct PathResult {
    std::vector<double> b0;                 // per lambda
    std::vector<std::vector<double>> beta;  // per lambda, standardized scale
};

PathResult solve_path(const DesignMatrix& xs, const Standardization& st, const CellData& cells,
                      OutcomeType outcome, const std::vector<double>& grid,
                      std::vector<double>* trace, double tol = kCoefTol,
                      bool safeguard = true) {
    std::size_t n = xs.rows, p = xs.cols;
    const std::vector<double>& wgt = cells.wgt;
    const std::vector<double>& ymean = cells.ymean;
    double W = cells.total;
    PathResult out;
    out.b0.assign(grid.size(), 0.0);
    out.beta.assign(grid.size(), std::vector<double>(p, 0.0));

    std::vector<double> cm(n * p);  // column-major
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) cm[j * n + i] = xs.at(i, j);
    }
    auto col = [&](std::size_t j) { return &cm[j * n]; };

    std::vector<std::size_t> eligible;
    for (std::size_t j = 0; j < p; ++j) {
        if (st.active[j]) eligible.push_back(j);
    }
    std::vector<double> beta(p, 0.0);
    std::vector<double> gram(p * p, 0.0);  // (1/W) X^T diag(w) X
    std::vector<double> gb(p, 0.0);        // gram * beta
    double b0 = 0.0;

    auto refresh_gb = [&]() {
        for (std::size_t j : eligible) {
            double s2 = 0.0;
            for (std::size_t k : eligible) {
                if (beta[k] != 0.0) s2 += gram[j * p + k] * beta[k];
            }
            gb[j] = s2;
        }
    };

    if (outcome == OutcomeType::Continuous) {
        double ybar = 0.0;
        for (std::size_t i = 0; i < n; ++i) ybar += wgt[i] * ymean[i];
        ybar /= W;
        std::vector<double> cy(p, 0.0);
        double yy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = ymean[i] - ybar;
            yy += wgt[i] * d * d;
        }
        yy /= W;
        for (std::size_t j : eligible) {
            const double* xj = col(j);
            double s2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) s2 += wgt[i] * xj[i] * (ymean[i] - ybar);
            cy[j] = s2 / W;
            for (std::size_t k : eligible) {
                if (k < j) continue;
                const double* xk = col(k);
                double g = 0.0;
                for (std::size_t i = 0; i < n; ++i) g += wgt[i] * xj[i] * xk[i];
                gram[j * p + k] = gram[k * p + j] = g / W;
            }
        }
        refresh_gb();
        // the within-cell variance term is constant in beta and omitted
        auto objective = [&](double lambda) {
            double quad = 0.0, lin = 0.0;
            for (std::size_t j : eligible) {
                quad += beta[j] * gb[j];
                lin += beta[j] * cy[j];
            }
            return 0.5 * (yy - 2.0 * lin + quad) + lambda * l1_norm_active(beta, st.active);
        };
        auto sweep = [&](const std::vector<std::size_t>& idx, double lambda) {
            double max_delta = 0.0;
            for (std::size_t j : idx) {
                double gjj = gram[j * p + j];
                if (gjj <= 0.0) continue;
                double num = cy[j] - gb[j] + gjj * beta[j];
                double bnew = soft_threshold(num, lambda) / gjj;
                double delta = bnew - beta[j];
                if (delta != 0.0) {
                    for (std::size_t k : eligible) gb[k] += gram[k * p + j] * delta;
                    beta[j] = bnew;
                }
                max_delta = std::max(max_delta, std::fabs(delta));
            }
            return max_delta;
        };
        for (std::size_t g = 0; g < grid.size(); ++g) {
            double lambda = grid[g];
            double prev_obj = objective(lambda);
            bool full_pass = true;
            std::vector<std::size_t> active;
            for (int sweeps = 0; sweeps < kMaxSweeps; ++sweeps) {
                double max_delta = sweep(full_pass ? eligible : active, lambda);
                double obj = objective(lambda);
                if (trace) trace->push_back(obj);
                if (obj > prev_obj + 1e-10 * (1.0 + std::fabs(prev_obj)))
                    throw estimation_error("ObjectiveIncreased", "gaussian coordinate descent");
                prev_obj = obj;
                if (max_delta < tol) {
                    if (full_pass) break;
                    full_pass = true;
                } else if (full_pass) {
                    active.clear();
                    for (std::size_t j : eligible) {
                        if (beta[j] != 0.0) active.push_back(j);
                    }
                    full_pass = active.empty();
                }
            }
            out.b0[g] = ybar;
            out.beta[g] = beta;
        }
        return out;
    }

    // binomial
    std::vector<double> eta(n, 0.0), prob(n, 0.5), w(n);
    std::vector<double> swx(p, 0.0), cs(p, 0.0);
    auto nll_obj = [&](double lambda) {
        return binomial_nll(eta, ymean, wgt, W) + lambda * l1_norm_active(beta, st.active);
    };
    auto set_eta_from_coef = [&]() {
        for (std::size_t i = 0; i < n; ++i) eta[i] = b0;
        for (std::size_t j : eligible) {
            if (beta[j] == 0.0) continue;
            const double* xj = col(j);
            for (std::size_t i = 0; i < n; ++i) eta[i] += xj[i] * beta[j];
        }
        for (std::size_t i = 0; i < n; ++i) prob[i] = expit(eta[i]);
    };
    set_eta_from_coef();

    for (std::size_t g = 0; g < grid.size(); ++g) {
        double lambda = grid[g];
        double prev_obj = safeguard ? nll_obj(lambda) : 0.0;
        int sweeps_used = 0;
        for (int outer = 0; outer < 200 && sweeps_used < kMaxSweeps; ++outer) {
            // weighted moments of the quadratic subproblem at the current fit
            double sw = 0.0, sbar = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double wi = prob[i] * (1.0 - prob[i]);
                if (wi < 1e-5) wi = 1e-5;
                w[i] = wgt[i] * wi;
                sw += w[i];
                sbar += w[i] * eta[i] + wgt[i] * (ymean[i] - prob[i]);  // w_i s_i
            }
            sw /= W;
            sbar /= W;
            for (std::size_t j : eligible) {
                const double* xj = col(j);
                double a1 = 0.0, a2 = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    a1 += w[i] * xj[i];
                    a2 += w[i] * xj[i] * eta[i] + wgt[i] * xj[i] * (ymean[i] - prob[i]);
                }
                swx[j] = a1 / W;
                cs[j] = a2 / W;
                for (std::size_t k : eligible) {
                    if (k < j) continue;
                    const double* xk = col(k);
                    double g2 = 0.0;
                    for (std::size_t i = 0; i < n; ++i) g2 += w[i] * xj[i] * xk[i];
                    gram[j * p + k] = gram[k * p + j] = g2 / W;
                }
            }
            refresh_gb();
            double b0_in = b0;
            std::vector<double> beta_in = beta;
            double tswx = 0.0;
            for (std::size_t j : eligible) tswx += swx[j] * beta[j];
            b0 = (sbar - tswx) / sw;
            auto qsweep = [&](const std::vector<std::size_t>& idx) {
                double max_delta = 0.0;
                for (std::size_t j : idx) {
                    double gjj = gram[j * p + j];
                    if (gjj <= 0.0) continue;
                    double num = cs[j] - swx[j] * b0 - gb[j] + gjj * beta[j];
                    double bnew = soft_threshold(num, lambda) / gjj;
                    double delta = bnew - beta[j];
                    if (delta != 0.0) {
                        for (std::size_t k : eligible) gb[k] += gram[k * p + j] * delta;
                        tswx += swx[j] * delta;
                        beta[j] = bnew;
                        b0 = (sbar - tswx) / sw;
                    }
                    max_delta = std::max(max_delta, std::fabs(delta));
                }
                return max_delta;
            };
            bool full_pass = true;
            std::vector<std::size_t> active;
            for (int inner = 0; inner < 1000 && sweeps_used < kMaxSweeps; ++inner) {
                ++sweeps_used;
                double max_delta = qsweep(full_pass ? eligible : active);
                if (max_delta < tol) {
                    if (full_pass) break;
                    full_pass = true;
                } else if (full_pass) {
                    active.clear();
                    for (std::size_t j : eligible) {
                        if (beta[j] != 0.0) active.push_back(j);
                    }
                    full_pass = active.empty();
                }
            }
            double outer_delta = std::fabs(b0 - b0_in);
            for (std::size_t j : eligible)
                outer_delta = std::max(outer_delta, std::fabs(beta[j] - beta_in[j]));

            set_eta_from_coef();
            if (!safeguard) {
                if (outer_delta < tol) break;
                continue;
            }
            double obj = nll_obj(lambda);
            // halve back toward the previous iterate if the quadratic step overshot
            int halvings = 0;
            while (obj > prev_obj + 1e-12 * (1.0 + std::fabs(prev_obj)) && halvings < 40) {
                b0 = 0.5 * (b0 + b0_in);
                for (std::size_t j = 0; j < p; ++j) beta[j] = 0.5 * (beta[j] + beta_in[j]);
                set_eta_from_coef();
                obj = nll_obj(lambda);
                ++halvings;
            }
            if (obj > prev_obj + 1e-12 * (1.0 + std::fabs(prev_obj))) {
                b0 = b0_in;
                beta = beta_in;
                set_eta_from_coef();
                if (trace) trace->push_back(prev_obj);
                break;  // stalled at a stationary point
            }
            if (trace) trace->push_back(obj);
            prev_obj = obj;
            if (outer_delta < tol) break;
        }
        out.b0[g] = b0;
        out.beta[g] = beta;
    }
    return out;
}

double lambda_max_for(const DesignMatrix& xs, const Standardization& st, const CellData& cells) {
    double ybar = 0.0;
    for (std::size_t i = 0; i < xs.rows; ++i) ybar += cells.wgt[i] * cells.ymean[i];
    ybar /= cells.total;
    double lmax = 0.0;
    for (std::size_t j = 0; j < xs.cols; ++j) {
        if (!st.active[j]) continue;
        double dot = 0.0;
        for (std::size_t i = 0; i < xs.rows; ++i) {
            dot += cells.wgt[i] * xs.at(i, j) * (cells.ymean[i] - ybar);
        }
        lmax = std::max(lmax, std::fabs(dot) / cells.total);
    }
    return lmax;
}

FittedModel degenerate_intercept(OutcomeType outcome, double value, double clip, bool flagged,
                                 const FeatureMap& fmap, LearnerKind kind) {
    FittedModel m;
    m.kind = kind;
    m.outcome = outcome;
    m.degenerate = flagged;
    m.fmap = fmap;
    m.intercept = (outcome == OutcomeType::Binary) ? clip_prob(value, clip) : value;
    return m;
}

// Main-effects logistic fit by damped Newton / IRLS on collapsed cells.
void fit_logistic_irls(const DesignMatrix& x, const std::vector<double>& y, double& intercept,
                       std::vector<double>& coef) {
    CellData cells = collapse_rows(x, y);
    std::size_t n = cells.x.rows, p = x.cols;
    double W = cells.total;
    Eigen::MatrixXd D(n, p + 1);
    Eigen::VectorXd wv(n), yv(n);
    for (std::size_t i = 0; i < n; ++i) {
        D(i, 0) = 1.0;
        for (std::size_t j = 0; j < p; ++j) D(i, j + 1) = cells.x.at(i, j);
        wv(i) = cells.wgt[i];
        yv(i) = cells.ymean[i];
    }
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p + 1);
    auto nll = [&](const Eigen::VectorXd& bb) {
        Eigen::VectorXd eta = D * bb;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = eta(i);
            double softplus = (e > 30.0) ? e : (e < -30.0 ? 0.0 : std::log1p(std::exp(e)));
            s += wv(i) * (softplus - yv(i) * e);
        }
        return s / W;
    };
    double prev = nll(b);
    for (int iter = 0; iter < 100; ++iter) {
        Eigen::VectorXd eta = D * b;
        Eigen::VectorXd prob(n), wirls(n);
        for (std::size_t i = 0; i < n; ++i) {
            prob(i) = expit(eta(i));
            wirls(i) = wv(i) * std::max(prob(i) * (1.0 - prob(i)), 1e-10);
        }
        Eigen::MatrixXd H = D.transpose() * wirls.asDiagonal() * D;
        H.diagonal().array() += 1e-8;
        Eigen::VectorXd grad = D.transpose() * (wv.array() * (yv - prob).array()).matrix();
        Eigen::VectorXd step = H.ldlt().solve(grad);
        if (!step.allFinite()) throw estimation_error("SingularDesign", "logistic IRLS");
        Eigen::VectorXd bnew = b + step;
        double cur = nll(bnew);
        int halvings = 0;
        double t = 1.0;
        while (cur > prev + 1e-12 && halvings < 40) {
            t *= 0.5;
            bnew = b + t * step;
            cur = nll(bnew);
            ++halvings;
        }
        double maxd = (bnew - b).cwiseAbs().maxCoeff();
        b = bnew;
        prev = cur;
        if (maxd < 1e-10) break;
    }
    intercept = b(0);
    coef.assign(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) coef[j] = b(j + 1);
}

void fit_linear_ols(const DesignMatrix& x, const std::vector<double>& y, double& intercept,
                    std::vector<double>& coef) {
    std::size_t n = x.rows, p = x.cols;
    Eigen::MatrixXd D(n, p + 1);
    for (std::size_t i = 0; i < n; ++i) {
        D(i, 0) = 1.0;
        for (std::size_t j = 0; j < p; ++j) D(i, j + 1) = x.at(i, j);
    }
    Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    Eigen::MatrixXd A = D.transpose() * D;
    Eigen::VectorXd rhs = D.transpose() * yv;
    Eigen::VectorXd b = A.ldlt().solve(rhs);
    if (!b.allFinite() ||
        (A * b - rhs).cwiseAbs().maxCoeff() > 1e-6 * (1.0 + rhs.cwiseAbs().maxCoeff())) {
        Eigen::MatrixXd Aj = A;  // ridge jitter, then give up
        Aj.diagonal().array() += 1e-10 * (A.trace() / static_cast<double>(p + 1) + 1.0);
        b = Aj.ldlt().solve(rhs);
        if (!b.allFinite()) throw estimation_error("SingularDesign", "linear fit");
    }
    intercept = b(0);
    coef.assign(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) coef[j] = b(j + 1);
}

// loss of raw-scale coefficients on a validation slice
double holdout_loss(const DesignMatrix& xe, const std::vector<double>& y,
                    const std::vector<std::size_t>& rows, double b0,
                    const std::vector<double>& beta, OutcomeType outcome) {
    double s = 0.0;
    for (std::size_t i : rows) {
        double e = b0;
        for (std::size_t j = 0; j < xe.cols; ++j) {
            if (beta[j] != 0.0) e += xe.at(i, j) * beta[j];
        }
        if (outcome == OutcomeType::Binary) {
            double pr = std::min(1.0 - 1e-12, std::max(1e-12, expit(e)));
            s += -(y[i] * std::log(pr) + (1.0 - y[i]) * std::log(1.0 - pr));
        } else {
            double d = y[i] - e;
            s += d * d;
        }
    }
    return s / static_cast<double>(rows.size());
}

DesignMatrix take_rows(const DesignMatrix& x, const std::vector<std::size_t>& rows) {
    DesignMatrix out = DesignMatrix::zeros(rows.size(), x.cols);
    out.names = x.names;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        std::memcpy(&out.data[k * x.cols], &x.data[rows[k] * x.cols], x.cols * sizeof(double));
    }
    return out;
}

// raw-scale (b0, beta) from a standardized-path solution
void unstandardize(const Standardization& st, double b0_std, const std::vector<double>& beta_std,
                   double& b0, std::vector<double>& beta) {
    b0 = b0_std;
    beta.assign(beta_std.size(), 0.0);
    for (std::size_t j = 0; j < beta_std.size(); ++j) {
        if (st.active[j] && beta_std[j] != 0.0) {
            beta[j] = beta_std[j] / st.sd[j];
            b0 -= beta_std[j] * st.mean[j] / st.sd[j];
        }
    }
}

FittedModel fit_l1(const LearnerSpec& spec, const DesignMatrix& x_base,
                   const std::vector<double>& y, OutcomeType outcome, std::uint64_t seed,
                   double clip, FitDiagnostics* diag) {
    DesignMatrix xe = expand_pairwise(x_base);
    FeatureMap fmap;
    fmap.n_base = x_base.cols;
    for (std::size_t i = 0; i < x_base.cols; ++i)
        for (std::size_t j = i + 1; j < x_base.cols; ++j) fmap.pairs.emplace_back(i, j);

    CellData cells = collapse_rows(xe, y);
    DesignMatrix xs = cells.x;
    Standardization st = standardize_columns(xs, cells.wgt, cells.total);

    std::vector<double> grid = spec.lambda_grid;
    if (grid.empty()) {
        double lmax = lambda_max_for(xs, st, cells);
        if (lmax <= 0.0) {
            return degenerate_intercept(outcome, mean_of(y), clip, false, fmap, spec.kind);
        }
        grid = default_lambda_grid(lmax);
    }

    std::size_t best = 0;
    if (grid.size() > 1) {
        std::vector<int> folds = content_hash_folds(xe, y, spec.cv_folds_for_lambda, seed);
        std::vector<double> loss(grid.size(), 0.0);
        for (int f = 0; f < spec.cv_folds_for_lambda; ++f) {
            std::vector<std::size_t> train, val;
            for (std::size_t i = 0; i < xe.rows; ++i) {
                (folds[i] == f ? val : train).push_back(i);
            }
            if (val.empty() || train.size() < 2) continue;
            std::vector<double> ytr(train.size());
            for (std::size_t k = 0; k < train.size(); ++k) ytr[k] = y[train[k]];
            if (is_constant(ytr)) {
                // constant-outcome fold: fall back to the clipped proportion
                double pr = (outcome == OutcomeType::Binary) ? clip_prob(ytr.front(), clip)
                                                             : ytr.front();
                std::vector<double> flat(xe.cols, 0.0);
                double b0c = (outcome == OutcomeType::Binary) ? std::log(pr / (1.0 - pr)) : pr;
                double fold_loss = holdout_loss(xe, y, val, b0c, flat, outcome);
                for (std::size_t g = 0; g < grid.size(); ++g) loss[g] += fold_loss;
                continue;
            }
            DesignMatrix xtr = take_rows(xe, train);
            CellData tr_cells = collapse_rows(xtr, ytr);
            DesignMatrix xtr_s = tr_cells.x;
            Standardization sttr = standardize_columns(xtr_s, tr_cells.wgt, tr_cells.total);
            // selection-only fits: looser tolerance, no objective safeguard
            PathResult pr = solve_path(xtr_s, sttr, tr_cells, outcome, grid, nullptr, 1e-6,
                                       false);
            for (std::size_t g = 0; g < grid.size(); ++g) {
                double b0;
                std::vector<double> braw;
                unstandardize(sttr, pr.b0[g], pr.beta[g], b0, braw);
                loss[g] += holdout_loss(xe, y, val, b0, braw, outcome);
            }
        }
        best = static_cast<std::size_t>(std::min_element(loss.begin(), loss.end()) -
                                        loss.begin());
    }

    std::vector<double> full_grid(grid.begin(), grid.begin() + best + 1);
    std::vector<double>* trace = diag ? &diag->objective_trace : nullptr;
    PathResult pr = solve_path(xs, st, cells, outcome, full_grid, trace);

    FittedModel m;
    m.kind = spec.kind;
    m.outcome = outcome;
    m.fmap = fmap;
    m.lambda_selected = grid[best];
    unstandardize(st, pr.b0[best], pr.beta[best], m.intercept, m.coef);
    return m;
}

// sort rows by content so every downstream sum sees one canonical order and
// fits are bitwise invariant to the input row order
void canonical_order(const DesignMatrix& x, const std::vector<double>& y, DesignMatrix& xs,
                     std::vector<double>& ys) {
    std::size_t n = x.rows;
    std::vector<std::pair<std::uint64_t, std::size_t>> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = {hash_row(x, y[i], i, 0x0517ULL), i};
    std::sort(keys.begin(), keys.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        int cmp = std::memcmp(&x.data[a.second * x.cols], &x.data[b.second * x.cols],
                              x.cols * sizeof(double));
        if (cmp != 0) return cmp < 0;
        return y[a.second] < y[b.second];
    });
    xs = DesignMatrix::zeros(n, x.cols);
    xs.names = x.names;
    ys.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::memcpy(&xs.data[k * x.cols], &x.data[keys[k].second * x.cols],
                    x.cols * sizeof(double));
        ys[k] = y[keys[k].second];
    }
}

}  // namespace

DesignMatrix expand_pairwise(const DesignMatrix& x) {
    std::size_t p = x.cols;
    std::size_t pe = p + p * (p - 1) / 2;
    DesignMatrix out = DesignMatrix::zeros(x.rows, pe);
    for (std::size_t j = 0; j < p; ++j) out.names[j] = x.names[j];
    std::size_t c = p;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            out.names[c++] = x.names[i] + ":" + x.names[j];
        }
    }
    for (std::size_t r = 0; r < x.rows; ++r) {
        for (std::size_t j = 0; j < p; ++j) out.at(r, j) = x.at(r, j);
        std::size_t k = p;
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j) {
                out.at(r, k++) = x.at(r, i) * x.at(r, j);
            }
        }
    }
    return out;
}

std::vector<double> default_lambda_grid(double lambda_max, std::size_t n_lambda,
                                        double min_ratio) {
    std::vector<double> grid(n_lambda);
    double lmin = lambda_max * min_ratio;
    for (std::size_t k = 0; k < n_lambda; ++k) {
        double t = (n_lambda == 1) ? 0.0
                                   : static_cast<double>(k) / static_cast<double>(n_lambda - 1);
        grid[k] = std::exp(std::log(lambda_max) + t * (std::log(lmin) - std::log(lambda_max)));
    }
    return grid;
}

std::vector<int> content_hash_folds(const DesignMatrix& x, const std::vector<double>& y, int k,
                                    std::uint64_t seed) {
    std::vector<std::pair<std::uint64_t, std::size_t>> keys(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) keys[i] = {hash_row(x, y[i], i, seed), i};
    std::sort(keys.begin(), keys.end());
    std::vector<int> fold(x.rows, 0);
    for (std::size_t t = 0; t < keys.size(); ++t) fold[keys[t].second] = static_cast<int>(t % k);
    return fold;
}

FittedModel fit_traced(const LearnerSpec& spec, const DesignMatrix& x,
                       const std::vector<double>& y, OutcomeType outcome, std::uint64_t seed,
                       double clip, FitDiagnostics* diag) {
    if (x.rows != y.size()) throw validation_error("LengthMismatch", "design rows vs outcome");
    if (spec.kind != LearnerKind::INTERCEPT_ONLY && y.size() < 2)
        throw validation_error("LengthMismatch", "need at least 2 rows to fit");
    if (outcome == OutcomeType::Binary && !column_is_binary(y))
        throw validation_error("NonBinaryColumn", "binary fit given non-binary outcome");

    FeatureMap plain;
    plain.n_base = x.cols;

    if (spec.kind == LearnerKind::INTERCEPT_ONLY) {
        return degenerate_intercept(outcome, mean_of(y), clip, false, plain, spec.kind);
    }
    if (is_constant(y)) {
        return degenerate_intercept(outcome, y.front(), clip, true, plain, spec.kind);
    }

    DesignMatrix xs;
    std::vector<double> ys;
    canonical_order(x, y, xs, ys);

    FittedModel m;
    m.outcome = outcome;
    m.kind = spec.kind;
    m.fmap = plain;
    switch (spec.kind) {
        case LearnerKind::LOGISTIC_MAIN:
            if (outcome == OutcomeType::Binary) {
                fit_logistic_irls(xs, ys, m.intercept, m.coef);
            } else {
                fit_linear_ols(xs, ys, m.intercept, m.coef);  // continuous analog
            }
            return m;
        case LearnerKind::LINEAR_MAIN:
            fit_linear_ols(xs, ys, m.intercept, m.coef);
            return m;
        case LearnerKind::LOGISTIC_L1_INTERACTIONS:
            return fit_l1(spec, xs, ys, outcome, seed, clip, diag);
        default:
            break;
    }
    throw estimation_error("UnknownLearner", "unhandled learner kind");
}

FittedModel fit(const LearnerSpec& spec, const DesignMatrix& x, const std::vector<double>& y,
                OutcomeType outcome, std::uint64_t seed, double clip) {
    return fit_traced(spec, x, y, outcome, seed, clip, nullptr);
}

std::vector<double> predict(const FittedModel& model, const DesignMatrix& x,
                            const std::vector<Override>& overrides, double clip) {
    for (const auto& ov : overrides) {
        if (ov.col >= model.fmap.n_base)
            throw validation_error("UnknownColumn", "override column " + std::to_string(ov.col));
    }
    if (x.cols != model.fmap.n_base)
        throw validation_error("UnknownColumn", "design width does not match feature map");

    std::vector<double> out(x.rows);
    std::vector<double> row(model.fmap.n_base);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < model.fmap.n_base; ++j) row[j] = x.at(i, j);
        for (const auto& ov : overrides) row[ov.col] = ov.value;
        double eta = model.intercept;
        if (!model.coef.empty()) {
            for (std::size_t j = 0; j < model.fmap.n_base; ++j) eta += model.coef[j] * row[j];
            for (std::size_t k = 0; k < model.fmap.pairs.size(); ++k) {
                double c = model.coef[model.fmap.n_base + k];
                if (c != 0.0)
                    eta += c * row[model.fmap.pairs[k].first] * row[model.fmap.pairs[k].second];
            }
        }
        if (model.kind == LearnerKind::INTERCEPT_ONLY || model.degenerate) {
            out[i] = (model.outcome == OutcomeType::Binary) ? clip_prob(eta, clip) : eta;
        } else if (model.outcome == OutcomeType::Binary) {
            out[i] = clip_prob(expit(eta), clip);
        } else {
            out[i] = eta;
        }
    }
    return out;
}

}  // namespace ivmed
