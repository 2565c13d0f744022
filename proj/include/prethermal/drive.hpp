#pragma once

#include <complex>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

/// Drive envelopes f(t), the Rabi modulation Omega [1 + f(t)], and the Fourier
/// content of quasi-periodic drives on the two-tone lattice (n1, n2).
namespace prethermal::drive {

using Complex = std::complex<double>;

/// (sqrt 5 - 1) / 2
inline constexpr double kGoldenRatio = std::numbers::phi - 1.0;

enum class DriveKind { constant_zero, sine, two_tone_sine, two_tone_rect, single_tone_rect };

std::string_view to_string(DriveKind kind);
DriveKind drive_kind_from_string(std::string_view name);

struct DriveWaveform {
    DriveKind kind = DriveKind::constant_zero;
    double omega = 0.0;            ///< base angular frequency, rad/us
    double ratio = kGoldenRatio;   ///< second tone is ratio * omega
    double amplitude = 0.0;        ///< Omega, rad/us

    /// Throws invalid_input for omega <= 0 on driven kinds or ratio outside (0, 1).
    void validate() const;
    bool is_driven() const { return kind != DriveKind::constant_zero; }
    bool is_two_tone() const { return kind == DriveKind::two_tone_sine || kind == DriveKind::two_tone_rect; }
    /// Largest tone frequency (0 for constant_zero).
    double max_frequency() const;
};

/// Sgn with Sgn(0) = 0.
double sgn(double x);

/// The drive as a function on the torus (theta1, theta2) = (omega t, ratio omega t).
double torus_value(const DriveWaveform& w, double theta1, double theta2);
/// f(t) = torus_value(w, omega t mod 2 pi, ratio omega t mod 2 pi).
double waveform_value(const DriveWaveform& w, double t);
/// Omega (1 + f(t)).
double rabi_envelope(const DriveWaveform& w, double t);

/// Coefficients F_{n1,n2} for |n1|, |n2| <= n_max.
class FourierSpectrum2D {
  public:
    explicit FourierSpectrum2D(int n_max);

    int n_max() const { return n_max_; }
    Complex operator()(int n1, int n2) const { return coefficients_[index(n1, n2)]; }
    Complex& at(int n1, int n2) { return coefficients_[index(n1, n2)]; }

    /// sum |F|^2 over the stored block.
    double power() const;
    /// max |F| over |n1| + |n2| = s, for s = 0 .. 2 n_max.
    std::vector<double> shell_maxima() const;

  private:
    std::size_t index(int n1, int n2) const;

    int n_max_;
    std::vector<Complex> coefficients_;
};

inline constexpr int kDefaultNMax = 64;
inline constexpr int kDefaultGridSize = 512;

/**
 * F_{n1,n2} = (1 / 4 pi^2) \iint g(theta1, theta2) e^{-i (n1 theta1 + n2 theta2)}
 * by a discrete transform on an M x M torus grid. Requires M >= 4 n_max.
 *
 * When M is a multiple of 8 the grid sines and cosines are tabulated with exact
 * reflection symmetry, so F_{-n1,-n2} = conj(F_{n1,n2}) and the odd symmetry
 * g(theta + pi) = -g carry over bit-exactly. Magnitudes below
 * kCoefficientFloor (the transform's rounding level) are stored as zero.
 */
FourierSpectrum2D fourier2d(const DriveWaveform& w, int n_max = kDefaultNMax, int grid_size = kDefaultGridSize);

inline constexpr double kCoefficientFloor = 1e-14;

/// (1 / M^2) sum g^2 on the same torus grid fourier2d samples.
double torus_mean_square(const DriveWaveform& w, int grid_size = kDefaultGridSize);

struct ProjectedEntry {
    int n1 = 0;
    int n2 = 0;
    double nu = 0.0;         ///< n1 omega + n2 ratio omega, rad/us
    Complex value;
    double magnitude = 0.0;
    bool near_degenerate = false;  ///< another entry lies within 1e-9 omega
};

struct ProjectedSpectrum {
    std::vector<ProjectedEntry> entries;  ///< ascending nu
};

ProjectedSpectrum project_spectrum(const FourierSpectrum2D& spectrum, double omega, double ratio);

/// sum |F| over entries with |nu| < local_scale.
double low_frequency_weight(const ProjectedSpectrum& projected, double local_scale);

/// CSV with header n1,n2,nu_rad_per_us,re_F,im_F,abs_F, rows sorted by |F| descending.
std::string spectrum_csv(const ProjectedSpectrum& projected);

}  // namespace prethermal::drive
