#include "rdgnet/io.hpp"

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "rdgnet/errors.hpp"

namespace rdgnet {

void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& writer, bool binary) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    try {
        std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
        if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
        writer(out);
        out.flush();
        if (!out) throw DataError("write to '" + tmp.string() + "' failed");
        out.close();
        fs::rename(tmp, target);
    } catch (const fs::filesystem_error& e) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw DataError(std::string("cannot write '") + path + "': " + e.what());
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
}

}  // namespace rdgnet
