#include "prethermal/drive.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "prethermal/error.hpp"
#include "prethermal/io.hpp"

namespace prethermal::drive {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// sin and cos of 2 pi k / M for k in [0, M).
struct TrigTable {
    std::vector<double> sin;
    std::vector<double> cos;
};

TrigTable make_trig_table(int m) {
    TrigTable t;
    t.sin.resize(static_cast<std::size_t>(m));
    t.cos.resize(static_cast<std::size_t>(m));
    if (m % 8 != 0) {
        for (int k = 0; k < m; ++k) {
            const double theta = kTwoPi * k / m;
            t.sin[static_cast<std::size_t>(k)] = std::sin(theta);
            t.cos[static_cast<std::size_t>(k)] = std::cos(theta);
        }
        return t;
    }
    // First quadrant from the first octant, then the other quadrants by reflection.
    const int quarter = m / 4;
    const int eighth = m / 8;
    std::vector<double> s(static_cast<std::size_t>(quarter + 1));
    std::vector<double> c(static_cast<std::size_t>(quarter + 1));
    for (int r = 0; r <= eighth; ++r) {
        const double theta = kTwoPi * r / m;
        s[static_cast<std::size_t>(r)] = std::sin(theta);
        c[static_cast<std::size_t>(r)] = std::cos(theta);
    }
    for (int r = eighth + 1; r <= quarter; ++r) {
        s[static_cast<std::size_t>(r)] = c[static_cast<std::size_t>(quarter - r)];
        c[static_cast<std::size_t>(r)] = s[static_cast<std::size_t>(quarter - r)];
    }
    s[static_cast<std::size_t>(eighth)] = std::sqrt(0.5);
    c[static_cast<std::size_t>(eighth)] = std::sqrt(0.5);
    s[0] = 0.0;
    c[0] = 1.0;
    s[static_cast<std::size_t>(quarter)] = 1.0;
    c[static_cast<std::size_t>(quarter)] = 0.0;
    for (int k = 0; k < m; ++k) {
        const int q = k / quarter;
        const auto r = static_cast<std::size_t>(k % quarter);
        double sv = 0.0;
        double cv = 0.0;
        switch (q) {
            case 0: sv = s[r]; cv = c[r]; break;
            case 1: sv = c[r]; cv = -s[r]; break;
            case 2: sv = -s[r]; cv = -c[r]; break;
            default: sv = -c[r]; cv = s[r]; break;
        }
        t.sin[static_cast<std::size_t>(k)] = sv;
        t.cos[static_cast<std::size_t>(k)] = cv;
    }
    return t;
}

double grid_value(const DriveWaveform& w, const TrigTable& t, int k1, int k2) {
    const double s1 = t.sin[static_cast<std::size_t>(k1)];
    const double s2 = t.sin[static_cast<std::size_t>(k2)];
    switch (w.kind) {
        case DriveKind::constant_zero: return 0.0;
        case DriveKind::sine: return s1;
        case DriveKind::two_tone_sine: return 0.5 * s1 + 0.5 * s2;
        case DriveKind::two_tone_rect: return sgn(0.5 * s1 + 0.5 * s2);
        case DriveKind::single_tone_rect: return sgn(s1);
    }
    fail(ErrorKind::unsupported, "drive kind has no torus lift");
}

}  // namespace

std::string_view to_string(DriveKind kind) {
    switch (kind) {
        case DriveKind::constant_zero: return "constant_zero";
        case DriveKind::sine: return "sine";
        case DriveKind::two_tone_sine: return "two_tone_sine";
        case DriveKind::two_tone_rect: return "two_tone_rect";
        case DriveKind::single_tone_rect: return "single_tone_rect";
    }
    return "unknown";
}

DriveKind drive_kind_from_string(std::string_view name) {
    for (DriveKind k : {DriveKind::constant_zero, DriveKind::sine, DriveKind::two_tone_sine, DriveKind::two_tone_rect,
                        DriveKind::single_tone_rect}) {
        if (name == to_string(k)) return k;
    }
    fail(ErrorKind::invalid_input, "unknown drive kind '" + std::string(name) + "'");
}

void DriveWaveform::validate() const {
    if (is_driven() && !(omega > 0.0)) fail(ErrorKind::invalid_input, "drive frequency must be positive");
    if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorKind::invalid_input, "tone ratio must lie in (0, 1)");
    if (!(amplitude >= 0.0)) fail(ErrorKind::invalid_input, "drive amplitude must be nonnegative");
}

double DriveWaveform::max_frequency() const {
    if (!is_driven()) return 0.0;
    return is_two_tone() ? std::max(omega, ratio * omega) : omega;
}

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double torus_value(const DriveWaveform& w, double theta1, double theta2) {
    switch (w.kind) {
        case DriveKind::constant_zero: return 0.0;
        case DriveKind::sine: return std::sin(theta1);
        case DriveKind::two_tone_sine: return 0.5 * std::sin(theta1) + 0.5 * std::sin(theta2);
        case DriveKind::two_tone_rect: return sgn(0.5 * std::sin(theta1) + 0.5 * std::sin(theta2));
        case DriveKind::single_tone_rect: return sgn(std::sin(theta1));
    }
    fail(ErrorKind::unsupported, "drive kind has no torus lift");
}

double waveform_value(const DriveWaveform& w, double t) {
    if (!w.is_driven()) return 0.0;
    return torus_value(w, std::fmod(w.omega * t, kTwoPi), std::fmod(w.ratio * w.omega * t, kTwoPi));
}

double rabi_envelope(const DriveWaveform& w, double t) { return w.amplitude * (1.0 + waveform_value(w, t)); }

// ---------------------------------------------------------------------------

FourierSpectrum2D::FourierSpectrum2D(int n_max)
    : n_max_(n_max), coefficients_(static_cast<std::size_t>((2 * n_max + 1) * (2 * n_max + 1))) {
    if (n_max < 0) fail(ErrorKind::invalid_input, "n_max must be nonnegative");
}

std::size_t FourierSpectrum2D::index(int n1, int n2) const {
    if (std::abs(n1) > n_max_ || std::abs(n2) > n_max_) fail(ErrorKind::invalid_input, "Fourier index out of range");
    return static_cast<std::size_t>((n1 + n_max_) * (2 * n_max_ + 1) + (n2 + n_max_));
}

double FourierSpectrum2D::power() const {
    double p = 0.0;
    for (const Complex& c : coefficients_) p += std::norm(c);
    return p;
}

std::vector<double> FourierSpectrum2D::shell_maxima() const {
    std::vector<double> out(static_cast<std::size_t>(2 * n_max_ + 1), 0.0);
    for (int n1 = -n_max_; n1 <= n_max_; ++n1) {
        for (int n2 = -n_max_; n2 <= n_max_; ++n2) {
            auto& slot = out[static_cast<std::size_t>(std::abs(n1) + std::abs(n2))];
            slot = std::max(slot, std::abs((*this)(n1, n2)));
        }
    }
    return out;
}

FourierSpectrum2D fourier2d(const DriveWaveform& w, int n_max, int grid_size) {
    w.validate();
    if (n_max < 0) fail(ErrorKind::invalid_input, "n_max must be nonnegative");
    if (grid_size < 4 * n_max || grid_size < 4) {
        fail(ErrorKind::invalid_input, "grid size " + std::to_string(grid_size) + " is below 4 n_max = " +
                                           std::to_string(4 * n_max));
    }
    const int m = grid_size;
    const TrigTable trig = make_trig_table(m);
    const int width = 2 * n_max + 1;

    std::vector<double> g(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
    for (int k1 = 0; k1 < m; ++k1) {
        for (int k2 = 0; k2 < m; ++k2) g[static_cast<std::size_t>(k1 * m + k2)] = grid_value(w, trig, k1, k2);
    }

    // e^{-i n theta_k} = cos[(n k) mod M] - i sin[(n k) mod M]
    auto twiddle = [&](int n, int k) {
        const long long idx = ((static_cast<long long>(n) * k) % m + m) % m;
        const auto j = static_cast<std::size_t>(idx);
        return Complex(trig.cos[j], -trig.sin[j]);
    };

    // partial[k1][n2] = sum_k2 g[k1][k2] e^{-i n2 theta_k2}
    std::vector<Complex> partial(static_cast<std::size_t>(m) * static_cast<std::size_t>(width));
    for (int k1 = 0; k1 < m; ++k1) {
        const double* row = &g[static_cast<std::size_t>(k1 * m)];
        for (int n2 = -n_max; n2 <= n_max; ++n2) {
            Complex acc = 0.0;
            for (int k2 = 0; k2 < m; ++k2) {
                if (row[k2] != 0.0) acc += row[k2] * twiddle(n2, k2);
            }
            partial[static_cast<std::size_t>(k1 * width + n2 + n_max)] = acc;
        }
    }

    FourierSpectrum2D out(n_max);
    const double norm = 1.0 / (static_cast<double>(m) * static_cast<double>(m));
    for (int n1 = -n_max; n1 <= n_max; ++n1) {
        for (int n2 = -n_max; n2 <= n_max; ++n2) {
            Complex acc = 0.0;
            for (int k1 = 0; k1 < m; ++k1) acc += partial[static_cast<std::size_t>(k1 * width + n2 + n_max)] * twiddle(n1, k1);
            acc *= norm;
            if (std::abs(acc) < kCoefficientFloor) acc = 0.0;
            out.at(n1, n2) = acc;
        }
    }
    return out;
}

double torus_mean_square(const DriveWaveform& w, int grid_size) {
    w.validate();
    const TrigTable trig = make_trig_table(grid_size);
    double acc = 0.0;
    for (int k1 = 0; k1 < grid_size; ++k1) {
        for (int k2 = 0; k2 < grid_size; ++k2) {
            const double v = grid_value(w, trig, k1, k2);
            acc += v * v;
        }
    }
    return acc / (static_cast<double>(grid_size) * static_cast<double>(grid_size));
}

ProjectedSpectrum project_spectrum(const FourierSpectrum2D& spectrum, double omega, double ratio) {
    ProjectedSpectrum out;
    const int n_max = spectrum.n_max();
    out.entries.reserve(static_cast<std::size_t>((2 * n_max + 1) * (2 * n_max + 1)));
    for (int n1 = -n_max; n1 <= n_max; ++n1) {
        for (int n2 = -n_max; n2 <= n_max; ++n2) {
            ProjectedEntry e;
            e.n1 = n1;
            e.n2 = n2;
            e.nu = n1 * omega + n2 * ratio * omega;
            e.value = spectrum(n1, n2);
            e.magnitude = std::abs(e.value);
            out.entries.push_back(e);
        }
    }
    std::stable_sort(out.entries.begin(), out.entries.end(),
                     [](const ProjectedEntry& a, const ProjectedEntry& b) { return a.nu < b.nu; });
    const double tie = 1e-9 * std::abs(omega);
    for (std::size_t k = 1; k < out.entries.size(); ++k) {
        if (out.entries[k].nu - out.entries[k - 1].nu < tie) {
            out.entries[k].near_degenerate = true;
            out.entries[k - 1].near_degenerate = true;
        }
    }
    return out;
}

double low_frequency_weight(const ProjectedSpectrum& projected, double local_scale) {
    if (!(local_scale > 0.0)) fail(ErrorKind::invalid_input, "local energy scale must be positive");
    double acc = 0.0;
    for (const ProjectedEntry& e : projected.entries) {
        if (std::abs(e.nu) < local_scale) acc += e.magnitude;
    }
    return acc;
}

std::string spectrum_csv(const ProjectedSpectrum& projected) {
    std::vector<ProjectedEntry> rows = projected.entries;
    std::stable_sort(rows.begin(), rows.end(), [](const ProjectedEntry& a, const ProjectedEntry& b) {
        if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
        if (a.n1 != b.n1) return a.n1 < b.n1;
        return a.n2 < b.n2;
    });
    std::ostringstream out;
    out << "n1,n2,nu_rad_per_us,re_F,im_F,abs_F\n";
    for (const ProjectedEntry& e : rows) {
        out << e.n1 << ',' << e.n2 << ',' << io::format_double(e.nu) << ',' << io::format_double(e.value.real()) << ','
            << io::format_double(e.value.imag()) << ',' << io::format_double(e.magnitude) << '\n';
    }
    return out.str();
}

}  // namespace prethermal::drive
