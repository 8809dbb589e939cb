#include "tcnet/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>

namespace tcnet {

namespace {

std::mutex g_fftw_plan_mutex;

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

std::size_t largest_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p * 2 <= n) p *= 2;
    return p;
}

void check_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) throw ValidationError("time series contains non-finite values");
}

}  // namespace

TimeSeries extract_site_series(const Trajectory& traj, int site, SpinComponent component) {
    const auto it = std::find(traj.sites.begin(), traj.sites.end(), site);
    if (it == traj.sites.end()) throw ValidationError("site " + std::to_string(site) + " was not recorded");
    const auto slot = static_cast<std::size_t>(it - traj.sites.begin());
    TimeSeries ts;
    ts.values.reserve(traj.records.size());
    for (const auto& r : traj.records) {
        const auto& v = component == SpinComponent::X ? r.sx : component == SpinComponent::Y ? r.sy : r.sz;
        ts.values.push_back(v.at(slot));
    }
    return ts;
}

TimeSeries loschmidt_series(const Trajectory& traj) {
    TimeSeries ts;
    ts.values.reserve(traj.records.size());
    for (const auto& r : traj.records) ts.values.push_back(r.loschmidt);
    return ts;
}

double loschmidt_echo(const DensityMatrix& rho0, const DensityMatrix& rho_n) {
    if (rho0.dim() != rho_n.dim()) throw ValidationError("Loschmidt echo: dimension mismatch");
    return hs_inner(rho0.matrix(), rho_n.matrix()).real();
}

const SpectralPeak* Spectrum::dominant() const {
    if (peaks.empty()) return nullptr;
    return &*std::max_element(peaks.begin(), peaks.end(),
                              [](const SpectralPeak& a, const SpectralPeak& b) { return a.magnitude < b.magnitude; });
}

Spectrum spectrum_of_series(const TimeSeries& ts, const SpectrumOptions& opts) {
    check_finite(ts.values);
    if (ts.burn_in < 0 || static_cast<std::size_t>(ts.burn_in) > ts.values.size())
        throw ValidationError("burn-in exceeds series length");
    const std::size_t avail = ts.values.size() - static_cast<std::size_t>(ts.burn_in);
    if (avail < static_cast<std::size_t>(opts.min_length))
        throw ValidationError("series too short for a spectrum: " + std::to_string(avail) + " samples after burn-in");
    const std::size_t len = largest_power_of_two(avail);
    const double* src = ts.values.data() + ts.burn_in;
    const double mean = std::accumulate(src, src + len, 0.0) / static_cast<double>(len);

    std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * len)));
    std::unique_ptr<fftw_complex, FftwFree> out(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (len / 2 + 1))));
    fftw_plan plan;
    {
        std::lock_guard lock(g_fftw_plan_mutex);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in.get(), out.get(), FFTW_ESTIMATE);
    }
    Spectrum sp;
    sp.length = static_cast<int>(len);
    sp.resolution = 2.0 * kPi / static_cast<double>(len);
    for (std::size_t i = 0; i < len; ++i) {
        in.get()[i] = src[i] - mean;
        sp.series_energy += in.get()[i] * in.get()[i];
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(g_fftw_plan_mutex);
        fftw_destroy_plan(plan);
    }

    const std::size_t bins = len / 2 + 1;
    const double scale = 1.0 / std::sqrt(static_cast<double>(len));
    sp.frequencies.resize(bins);
    sp.magnitudes.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        const double mag = std::hypot(out.get()[k][0], out.get()[k][1]) * scale;
        const bool mirrored = k != 0 && k != len / 2;
        sp.frequencies[k] = sp.resolution * static_cast<double>(k);
        sp.magnitudes[k] = mirrored ? std::sqrt(2.0) * mag : mag;
    }

    double top = 0.0;
    for (std::size_t k = 1; k < bins; ++k) top = std::max(top, sp.magnitudes[k]);
    const double threshold = std::max(opts.peak_fraction * top, opts.noise_floor);
    for (std::size_t k = 1; k < bins; ++k) {
        const double m = sp.magnitudes[k];
        if (m <= threshold) continue;
        const bool left = m > sp.magnitudes[k - 1];
        const bool right = k + 1 == bins || m >= sp.magnitudes[k + 1];
        if (left && right) sp.peaks.push_back({static_cast<int>(k), sp.frequencies[k], m});
    }
    return sp;
}

double fold_frequency(double omega) { return std::abs(wrap_phase(omega)); }

bool frequency_matches(double f, double target, double resolution, double bins) {
    return std::abs(fold_frequency(f) - fold_frequency(target)) <= bins * resolution + 1e-12;
}

DecayFit fit_decay_envelope(const TimeSeries& ts, int min_extrema) {
    check_finite(ts.values);
    const auto begin = static_cast<std::size_t>(std::max(ts.burn_in, 0));
    if (ts.values.size() < begin + 3) throw ValidationError("series too short for an envelope fit");
    const std::size_t len = ts.values.size() - begin;
    const double* src = ts.values.data() + begin;
    const double mean = std::accumulate(src, src + len, 0.0) / static_cast<double>(len);

    std::vector<double> pos;
    std::vector<double> logs;
    for (std::size_t k = 1; k + 1 < len; ++k) {
        const double a = src[k - 1] - mean;
        const double b = src[k] - mean;
        const double c = src[k + 1] - mean;
        const bool is_max = b > a && b >= c;
        const bool is_min = b < a && b <= c;
        if (!is_max && !is_min) continue;
        const double curv = a - 2.0 * b + c;
        double offset = 0.0;
        double vertex = b;
        if (curv != 0.0) {
            offset = 0.5 * (a - c) / curv;
            vertex = b - (c - a) * (c - a) / (8.0 * curv);
        }
        if (std::abs(vertex) < 1e-300) continue;
        pos.push_back(static_cast<double>(k) + offset);
        logs.push_back(std::log(std::abs(vertex)));
    }
    if (static_cast<int>(pos.size()) < min_extrema)
        throw ValidationError("insufficient extrema for an envelope fit: " + std::to_string(pos.size()));

    const double n = static_cast<double>(pos.size());
    const double mx = std::accumulate(pos.begin(), pos.end(), 0.0) / n;
    const double my = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        sxx += (pos[i] - mx) * (pos[i] - mx);
        sxy += (pos[i] - mx) * (logs[i] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const double r = logs[i] - (intercept + slope * pos[i]);
        ss += r * r;
    }

    DecayFit fit;
    fit.gamma = -slope / ts.stride;
    fit.residual = std::sqrt(ss / n);
    fit.extrema = static_cast<int>(pos.size());
    fit.amplitude = std::exp(intercept + slope * pos.front());
    const double spacing = (pos.back() - pos.front()) / (n - 1.0);
    fit.frequency = kPi / (spacing * ts.stride);
    return fit;
}

double autocorrelation(const TimeSeries& ts, int lag) {
    const auto begin = static_cast<std::size_t>(std::max(ts.burn_in, 0));
    if (lag < 0 || ts.values.size() < begin + static_cast<std::size_t>(lag) + 2)
        throw ValidationError("autocorrelation lag too large");
    const std::size_t count = ts.values.size() - begin - static_cast<std::size_t>(lag);
    const double* x = ts.values.data() + begin;
    const double* y = x + lag;
    const double mx = std::accumulate(x, x + count, 0.0) / static_cast<double>(count);
    const double my = std::accumulate(y, y + count, 0.0) / static_cast<double>(count);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

int commensurate_lag(double omega, int max_lag) {
    if (max_lag < 1) throw ValidationError("max_lag must be positive");
    int best = 1;
    double best_err = std::abs(wrap_phase(omega));
    for (int lag = 2; lag <= max_lag; ++lag) {
        const double err = std::abs(wrap_phase(omega * lag));
        if (err < best_err - 1e-12) {
            best = lag;
            best_err = err;
        }
    }
    return best;
}

double late_amplitude(const TimeSeries& ts) {
    const auto begin = static_cast<std::ptrdiff_t>(std::max(ts.burn_in, 0));
    if (static_cast<std::size_t>(begin) >= ts.values.size()) throw ValidationError("no samples after burn-in");
    const auto [lo, hi] = std::minmax_element(ts.values.begin() + begin, ts.values.end());
    return 0.5 * (*hi - *lo);
}

}  // namespace tcnet
