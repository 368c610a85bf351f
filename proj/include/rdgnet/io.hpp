#pragma once

#include <functional>
#include <iosfwd>
#include <string>

namespace rdgnet {

// Writes through a sibling temporary file renamed over `path` on success, so
// readers never observe a partial file. Throws DataError on I/O failure.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& writer, bool binary = false);

}  // namespace rdgnet
