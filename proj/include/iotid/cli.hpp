#pragma once

namespace iotid::cli {

// Full command-line driver: generate / ingest / train / eval / bench /
// explain. Returns the process exit code: 0 success, 1 internal failure,
// 2 bad usage or bad input data.
int run(int argc, const char* const* argv);

}  // namespace iotid::cli
