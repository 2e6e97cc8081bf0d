#pragma once

#include <string>

namespace spotvol {

enum class KernelName { Epanechnikov, Uniform, Gaussian };

/// Smoothing kernel. Epanechnikov and Uniform live on [-1, 1]; Gaussian has
/// unbounded support and is evaluated on [-6, 6] unless `exact` asks for the
/// full tails.
struct KernelSpec {
    KernelName name = KernelName::Epanechnikov;
    /// Force full summation for the Gaussian kernel instead of the +-6b window.
    bool exact = false;

    bool compact() const { return name != KernelName::Gaussian; }
    /// Support radius in units of the bandwidth; infinity when exact Gaussian.
    double radius() const;
    /// Kernel value at u (bandwidth 1). Integrates to 1 over the real line.
    double operator()(double u) const;

    static KernelSpec parse(const std::string& name);
    std::string str() const;
};

}  // namespace spotvol
