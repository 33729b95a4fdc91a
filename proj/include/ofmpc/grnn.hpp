#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ofmpc/numerics.hpp"

namespace ofmpc {

struct GrnnSample {
    Vector input;  // setpoint, n_z entries
    Vector output; // steady disturbance, n_d entries
};

/// General regression network: a Nadaraya-Watson average of stored outputs
/// with Gaussian weights exp(-|i - i_s|^2 / (2 sigma^2)) over standardized
/// inputs. Samples live in a FIFO window of fixed capacity.
class GrnnModel {
public:
    static constexpr double kDefaultSigma = 0.5;

    GrnnModel(std::size_t nz, std::size_t nd, std::size_t capacity,
              double sigma = kDefaultSigma);

    /// Weighted average of sample outputs; the zero vector when empty.
    [[nodiscard]] Vector predict(const Vector& r) const;

    /// Appends a sample, evicting the oldest when over capacity, and
    /// recomputes the input standardization.
    void add_sample(const Vector& r, const Vector& d);

    void set_sigma(double sigma);
    [[nodiscard]] double sigma() const noexcept { return sigma_; }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] std::size_t nz() const noexcept { return nz_; }
    [[nodiscard]] std::size_t nd() const noexcept { return nd_; }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }
    [[nodiscard]] const std::deque<GrnnSample>& samples() const noexcept { return samples_; }
    [[nodiscard]] const Vector& input_mean() const noexcept { return mean_; }
    [[nodiscard]] const Vector& input_spread() const noexcept { return spread_; }

    /// Prediction from all samples except `skip`, with an explicit sigma.
    [[nodiscard]] Vector predict_excluding(const Vector& r, std::size_t skip, double sigma) const;

private:
    [[nodiscard]] Vector normalize(const Vector& r) const;
    [[nodiscard]] Vector weighted_average(const Vector& z, std::size_t skip, double sigma) const;
    void rescale();

    std::size_t nz_;
    std::size_t nd_;
    std::size_t capacity_;
    double sigma_;
    std::deque<GrnnSample> samples_;
    std::vector<Vector> normalized_;
    Vector mean_;
    Vector spread_;
};

/// Value-semantics form: returns a copy of `model` with the sample appended.
[[nodiscard]] GrnnModel add_sample(GrnnModel model, const Vector& r, const Vector& d);

/// 61 log-spaced values from 1e-3 to 1e3 in standardized units.
[[nodiscard]] std::vector<double> default_sigma_grid();

/// Mean squared leave-one-out prediction error for the given sigma.
[[nodiscard]] double loo_error(const GrnnModel& model, double sigma);

struct SigmaSelection {
    double sigma = 0.0;
    double error = 0.0;
    std::vector<double> grid;
    std::vector<double> errors;
};

/// Leave-one-out selection over the grid; ties go to the smaller sigma.
/// Throws InsufficientData with fewer than two samples.
[[nodiscard]] SigmaSelection select_sigma(const GrnnModel& model,
                                          const std::vector<double>& grid = default_sigma_grid());

/// Text format: one sample per line, setpoint components then disturbance
/// components, whitespace separated. '#' starts a comment. Directive comments
/// "# nz=<n> nd=<n>", "# sigma=<v>" and "# capacity=<n>" carry metadata.
void write_samples(std::ostream& out, const GrnnModel& model, bool with_sigma = false);

struct SampleFile {
    std::size_t nz = 0;
    std::size_t nd = 0;
    std::optional<double> sigma;
    std::optional<std::size_t> capacity;
    std::vector<GrnnSample> samples;
};

/// Throws ParseError naming the offending line. `nz_hint` is used when the
/// file carries no dimension directive.
[[nodiscard]] SampleFile read_samples(std::istream& in, std::optional<std::size_t> nz_hint = {});

/// Builds a model from a parsed file. Capacity defaults to the sample count.
[[nodiscard]] GrnnModel model_from_file(const SampleFile& file);

} // namespace ofmpc
