#pragma once

namespace capstat {

// Execution policy for data-parallel kernels. Both paths produce bit-identical
// results; `serial` is the reference implementation used by tests and as the
// baseline in the benchmark target.
enum class Exec { serial, parallel };

}  // namespace capstat
