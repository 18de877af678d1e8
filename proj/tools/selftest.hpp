#pragma once

#include <ostream>

/// Gradient checks plus codec round trips; prints one line per check.
bool run_selftest(std::ostream& out);
