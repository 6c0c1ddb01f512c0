#pragma once

namespace sonine {

// Every parallel code path has a serial twin that produces bit-identical
// results; `serial` forces it (used by tests and the comparison benchmark).
enum class ExecutionPolicy { serial, parallel };

} // namespace sonine
