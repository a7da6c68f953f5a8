#pragma once

#include "kafnet/net.hpp"

// Serial scalar-loop evaluator, written directly from the layer formulas and
// kept deliberately independent of the code in net.cpp. Tests use it as the
// oracle for the parallel kernels; the benchmark uses it as the serial
// baseline.
namespace kafnet::reference {

ForwardTrace forward(const Kafnet& net, const std::vector<double>& x);
double loss(const Kafnet& net, const std::vector<double>& x, std::size_t label);
double empirical_risk(const Kafnet& net, const std::vector<Sample>& dataset);

} // namespace kafnet::reference
