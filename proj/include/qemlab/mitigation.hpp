#pragma once

// Zero-noise extrapolation over stretch series, readout-error inversion and
// bootstrap uncertainty estimation.
//
// Extrapolation runs in the stretch variable c itself.  With exactly
// order+1 points the unique interpolating polynomial is evaluated at c = 0
// (Richardson, closed-form Lagrange weights); with more points a weighted
// least-squares polynomial fit is used.  Either way the estimate is a fixed
// linear combination of the measured values, so the standard error
// propagates through the weights.  Estimates with |value| > 1 are flagged
// unphysical but never clipped.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qemlab/noise.hpp"
#include "qemlab/rng.hpp"
#include "qemlab/sim.hpp"

namespace qemlab {

struct StretchPoint {
    double c = 1.0;
    double value = 0.0;
    double stderr_ = 0.0;
};

struct StretchSeries {
    std::vector<StretchPoint> points;
    std::string observable;
    std::string circuit_id;

    void validate() const {
        if (points.size() < 2) throw std::invalid_argument("need at least 2 stretch points");
        for (size_t i = 0; i < points.size(); ++i) {
            if (points[i].c < 1.0) throw std::invalid_argument("stretch factors must be >= 1");
            if (i > 0 && points[i].c <= points[i - 1].c + 1e-12)
                throw std::invalid_argument("stretch factors must be strictly increasing");
        }
    }
};

enum class ExtrapolationMethod { richardson_exact, least_squares };

struct MitigatedValue {
    double estimate = 0.0;
    double stderr_ = 0.0;
    int order = 1;
    ExtrapolationMethod method = ExtrapolationMethod::least_squares;
    bool unphysical = false;  // |estimate| > 1 for a Pauli observable
};

// Weights w with estimate = sum_i w_i y_i for the degree-`order` polynomial
// evaluated at c = 0 (least squares when points > order+1, inverse-variance
// weighted when every point carries a positive stderr).
inline std::vector<double> extrapolation_weights(const std::vector<double>& cs, int order,
                                                 const std::vector<double>& sigmas = {}) {
    const int n = static_cast<int>(cs.size());
    if (order < 1) throw std::invalid_argument("order must be >= 1");
    if (n < order + 1) throw std::invalid_argument("need at least order+1 stretch points");
    if (n == order + 1) {
        // Lagrange basis evaluated at 0
        std::vector<double> w(n, 1.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                w[i] *= cs[j] / (cs[j] - cs[i]);
            }
        return w;
    }
    std::vector<double> wts(n, 1.0);
    bool all_positive = !sigmas.empty();
    for (double s : sigmas)
        if (!(s > 0)) all_positive = false;
    if (all_positive)
        for (int i = 0; i < n; ++i) wts[i] = 1.0 / (sigmas[i] * sigmas[i]);
    // estimate = e0^T (X^T W X)^{-1} X^T W y
    Eigen::MatrixXd x(n, order + 1);
    for (int i = 0; i < n; ++i) {
        double p = 1.0;
        for (int k = 0; k <= order; ++k) {
            x(i, k) = p;
            p *= cs[i];
        }
    }
    Eigen::MatrixXd xw = x.transpose();
    for (int i = 0; i < n; ++i) xw.col(i) *= wts[i];
    Eigen::MatrixXd gram = xw * x;
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(order + 1);
    e0(0) = 1.0;
    Eigen::VectorXd coef = gram.ldlt().solve(e0);
    Eigen::VectorXd w = xw.transpose() * coef;
    return std::vector<double>(w.data(), w.data() + n);
}

inline MitigatedValue extrapolate(const StretchSeries& series, int order) {
    series.validate();
    const int n = static_cast<int>(series.points.size());
    if (order >= n) throw std::invalid_argument("order must be < number of points");
    std::vector<double> cs(n), sigmas(n);
    for (int i = 0; i < n; ++i) {
        cs[i] = series.points[i].c;
        sigmas[i] = series.points[i].stderr_;
    }
    std::vector<double> w = extrapolation_weights(cs, order, sigmas);
    MitigatedValue out;
    out.order = order;
    out.method = (n == order + 1) ? ExtrapolationMethod::richardson_exact
                                  : ExtrapolationMethod::least_squares;
    double est = 0, var = 0;
    for (int i = 0; i < n; ++i) {
        est += w[i] * series.points[i].value;
        var += w[i] * w[i] * series.points[i].stderr_ * series.points[i].stderr_;
    }
    out.estimate = est;
    out.stderr_ = std::sqrt(var);
    out.unphysical = std::abs(est) > 1.0 + 1e-12;
    return out;
}

// ---------------------------------------------------------------------------
// Readout mitigation
// ---------------------------------------------------------------------------

// Applies the per-qubit inverse confusion matrices to a distribution over
// bitstrings.  The result is a quasi-probability vector (entries may leave
// [0,1]); expectations are computed on it directly.
inline std::vector<double> readout_mitigate_probs(std::vector<double> probs,
                                                  const std::vector<Eigen::Matrix2d>& confusion) {
    const size_t dim = probs.size();
    size_t n = 0;
    while ((size_t(1) << n) < dim) ++n;
    if ((size_t(1) << n) != dim) throw std::invalid_argument("probability vector not 2^n long");
    if (confusion.size() != n) throw std::invalid_argument("confusion matrix count mismatch");
    for (size_t q = 0; q < n; ++q) {
        check_confusion(confusion[q]);
        const double det = confusion[q].determinant();
        if (std::abs(det) < 1e-12)
            throw std::invalid_argument("singular confusion matrix on qubit " + std::to_string(q));
        Eigen::Matrix2d inv = confusion[q].inverse();
        const size_t stride = size_t(1) << q;
        for (size_t base = 0; base < dim; ++base) {
            if (base & stride) continue;
            double p0 = probs[base], p1 = probs[base | stride];
            probs[base] = inv(0, 0) * p0 + inv(0, 1) * p1;
            probs[base | stride] = inv(1, 0) * p0 + inv(1, 1) * p1;
        }
    }
    return probs;
}

inline std::vector<double> counts_to_probs(const Counts& counts) {
    if (counts.total <= 0) throw std::invalid_argument("empty counts");
    size_t n = counts.shots.begin()->first.size();
    std::vector<double> probs(size_t(1) << n, 0.0);
    for (const auto& [bits, c] : counts.shots) {
        size_t idx = 0;
        for (size_t q = 0; q < n; ++q)
            if (bits[q] == '1') idx |= size_t(1) << q;
        probs[idx] += double(c) / double(counts.total);
    }
    return probs;
}

// Corrected expectation of a Pauli diagonal in the measured basis, with the
// binomial standard error propagated through the linear correction.
inline EstimatedValue readout_mitigate(const Counts& counts, const std::string& pauli,
                                       const std::vector<Eigen::Matrix2d>& confusion) {
    check_basis(pauli, counts.basis);
    std::vector<double> probs = readout_mitigate_probs(counts_to_probs(counts), confusion);
    EstimatedValue ev;
    ev.shots = counts.total;
    ev.value = probs_expectation(probs, pauli, counts.basis);
    // conservative: raw binomial error scaled by the 1-norm amplification of
    // the per-qubit inverses on the observable's support
    double amp = 1.0;
    for (size_t q = 0; q < pauli.size(); ++q) {
        if (pauli[q] == 'I') continue;
        Eigen::Matrix2d inv = confusion[q].inverse();
        amp *= std::max(std::abs(inv(0, 0)) + std::abs(inv(0, 1)),
                        std::abs(inv(1, 0)) + std::abs(inv(1, 1)));
    }
    double raw = probs_expectation(counts_to_probs(counts), pauli, counts.basis);
    ev.stderr_ = amp * std::sqrt(std::max(0.0, 1.0 - raw * raw) / double(counts.total));
    return ev;
}

// ---------------------------------------------------------------------------
// Twirl-instance pooling
// ---------------------------------------------------------------------------

// Shot-weighted mean across twirl instances with pooled variance.
inline EstimatedValue average_twirl_instances(const std::vector<EstimatedValue>& instances) {
    if (instances.empty()) throw std::invalid_argument("no instances to pool");
    double total = 0;
    for (const auto& ev : instances) total += double(std::max<long long>(ev.shots, 1));
    EstimatedValue out;
    out.shots = 0;
    double mean = 0, var = 0;
    for (const auto& ev : instances) {
        double w = double(std::max<long long>(ev.shots, 1)) / total;
        mean += w * ev.value;
        var += w * w * ev.stderr_ * ev.stderr_;
        out.shots += ev.shots;
    }
    out.value = mean;
    out.stderr_ = std::sqrt(var);
    return out;
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

struct BootstrapResult {
    std::vector<double> estimates;
    double mean = 0;
    double stddev = 0;
};

inline Counts resample_counts(const Counts& counts, std::mt19937_64& rng) {
    if (counts.total <= 0) throw std::invalid_argument("empty counts");
    std::vector<std::pair<std::string, long long>> entries(counts.shots.begin(),
                                                           counts.shots.end());
    std::vector<double> cum(entries.size());
    double acc = 0;
    for (size_t i = 0; i < entries.size(); ++i) {
        acc += double(entries[i].second);
        cum[i] = acc;
    }
    Counts out;
    out.seed = counts.seed;
    out.basis = counts.basis;
    std::uniform_real_distribution<double> unif(0.0, acc);
    for (long long s = 0; s < counts.total; ++s) {
        double u = unif(rng);
        size_t pick = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
        if (pick >= entries.size()) pick = entries.size() - 1;
        out.add(entries[pick].first);
    }
    return out;
}

// Resamples each stretch factor's counts with replacement at the original
// shot totals, reruns the supplied pipeline (readout mitigation +
// extrapolation) per resample, and reports the spread.
inline BootstrapResult bootstrap(
    const std::vector<std::vector<Counts>>& counts_per_stretch, int resamples, uint64_t seed,
    const std::function<double(const std::vector<std::vector<Counts>>&)>& pipeline) {
    if (resamples < 1) throw std::invalid_argument("resamples must be >= 1");
    for (const auto& per_c : counts_per_stretch)
        for (const auto& counts : per_c)
            if (counts.total <= 0) throw std::invalid_argument("empty counts in bootstrap");
    BootstrapResult out;
    out.estimates.reserve(resamples);
    for (int r = 0; r < resamples; ++r) {
        auto rng = make_rng(seed, seed_stream::bootstrap, static_cast<uint64_t>(r));
        std::vector<std::vector<Counts>> resampled(counts_per_stretch.size());
        for (size_t ci = 0; ci < counts_per_stretch.size(); ++ci)
            for (const auto& counts : counts_per_stretch[ci])
                resampled[ci].push_back(resample_counts(counts, rng));
        out.estimates.push_back(pipeline(resampled));
    }
    double mean = 0;
    for (double e : out.estimates) mean += e;
    mean /= double(resamples);
    double var = 0;
    for (double e : out.estimates) var += (e - mean) * (e - mean);
    out.mean = mean;
    out.stddev = resamples > 1 ? std::sqrt(var / double(resamples - 1)) : 0.0;
    return out;
}

}  // namespace qemlab
