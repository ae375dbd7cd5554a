#include "mse/kosovo.hpp"

#include <sstream>
#include <string>

#include "mse/errors.hpp"
#include "mse/table_io.hpp"

namespace mse {

std::string_view kosovo_csv() noexcept {
    static constexpr std::string_view kCsv =
        "ABA,EXH,HRW,OSCE,count\n"
        "1,0,0,0,845\n"
        "0,1,0,0,1131\n"
        "1,1,0,0,177\n"
        "0,0,1,0,306\n"
        "1,0,1,0,31\n"
        "0,1,1,0,106\n"
        "1,1,1,0,18\n"
        "0,0,0,1,936\n"
        "1,0,0,1,217\n"
        "0,1,0,1,228\n"
        "1,1,0,1,181\n"
        "0,0,1,1,123\n"
        "1,0,1,1,32\n"
        "0,1,1,1,42\n"
        "1,1,1,1,27\n";
    return kCsv;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ObservedTable kosovo_table() {
    const auto csv = kosovo_csv();
    if (fnv1a64(csv) != kKosovoChecksum) {
        throw Error(ErrorCode::InvalidArgument, "Kosovo fixture checksum mismatch");
    }
    std::istringstream in{std::string(csv)};
    return load_table_csv(in);
}

}  // namespace mse
