#pragma once

#include "tcnet/channel.hpp"
#include "tcnet/core.hpp"

#include <vector>

namespace tcnet {

enum class SpinComponent { X, Y, Z };

struct TimeSeries {
    std::vector<double> values;
    int stride = 1;
    int burn_in = 0;  // values before this index are transients
};

TimeSeries extract_site_series(const Trajectory& traj, int site, SpinComponent component);
TimeSeries loschmidt_series(const Trajectory& traj);

// Tr(rho0^dagger rho_n)
double loschmidt_echo(const DensityMatrix& rho0, const DensityMatrix& rho_n);

struct SpectralPeak {
    int bin = 0;
    double frequency = 0.0;  // rad/step
    double magnitude = 0.0;
};

struct Spectrum {
    int length = 0;           // samples transformed
    double resolution = 0.0;  // 2 pi / length
    std::vector<double> frequencies;  // bins 0..length/2
    std::vector<double> magnitudes;
    std::vector<SpectralPeak> peaks;  // ascending frequency
    double series_energy = 0.0;       // sum of squared mean-subtracted samples

    const SpectralPeak* dominant() const;
};

struct SpectrumOptions {
    double peak_fraction = 0.05;
    double noise_floor = 1e-8;  // peaks also need magnitude above this
    int min_length = 256;
};

// One-sided magnitude DFT of the mean-subtracted series from `burn_in`, truncated
// to the largest power of two. Magnitudes are scaled so that their squares sum
// to the series energy.
Spectrum spectrum_of_series(const TimeSeries& ts, const SpectrumOptions& opts = {});

// True when |f - target| folded to [0, pi] is within `bins` resolutions.
bool frequency_matches(double f, double target, double resolution, double bins = 1.0);
double fold_frequency(double omega);  // |wrap_phase(omega)|

struct DecayFit {
    double gamma = 0.0;      // 1/step
    double frequency = 0.0;  // rad/step from the mean extremum spacing
    double residual = 0.0;   // rms of the log-envelope fit
    double amplitude = 0.0;  // envelope at the first extremum
    int extrema = 0;
};

// Least-squares line through log|y_k| at successive extrema of the
// mean-subtracted series (vertices refined by a parabola); gamma = -slope.
DecayFit fit_decay_envelope(const TimeSeries& ts, int min_extrema = 20);

// Pearson correlation between x[burn_in..L-lag) and x[burn_in+lag..L).
double autocorrelation(const TimeSeries& ts, int lag);

// Integer lag in [1, max_lag] where omega * lag is closest to a multiple of 2 pi.
int commensurate_lag(double omega, int max_lag);

double late_amplitude(const TimeSeries& ts);  // (max - min) / 2 after burn-in

}  // namespace tcnet
