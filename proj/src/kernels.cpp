#include "spotvol/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace spotvol {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kGaussianWindow = 6.0;
}  // namespace

double KernelSpec::radius() const {
    switch (name) {
        case KernelName::Epanechnikov:
        case KernelName::Uniform:
            return 1.0;
        case KernelName::Gaussian:
            return exact ? std::numeric_limits<double>::infinity() : kGaussianWindow;
    }
    return 1.0;
}

double KernelSpec::operator()(double u) const {
    switch (name) {
        case KernelName::Epanechnikov:
            return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
        case KernelName::Uniform:
            return std::abs(u) <= 1.0 ? 0.5 : 0.0;
        case KernelName::Gaussian:
            if (!exact && std::abs(u) > kGaussianWindow) return 0.0;
            return kInvSqrt2Pi * std::exp(-0.5 * u * u);
    }
    return 0.0;
}

KernelSpec KernelSpec::parse(const std::string& name) {
    if (name == "epanechnikov") return {KernelName::Epanechnikov, false};
    if (name == "uniform") return {KernelName::Uniform, false};
    if (name == "gaussian") return {KernelName::Gaussian, false};
    if (name == "gaussian-exact") return {KernelName::Gaussian, true};
    throw std::invalid_argument("unknown kernel: " + name);
}

std::string KernelSpec::str() const {
    switch (name) {
        case KernelName::Epanechnikov: return "epanechnikov";
        case KernelName::Uniform: return "uniform";
        case KernelName::Gaussian: return exact ? "gaussian-exact" : "gaussian";
    }
    return "?";
}

}  // namespace spotvol
