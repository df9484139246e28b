#pragma once

#include <string>

#include "mavgram/waveform.hpp"

namespace mavgram {

// Mono 16-bit PCM RIFF/WAVE. Samples map to [-1, 1) via s/32768 on read;
// write quantizes with round(x*32768) clamped to the int16 range.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

// Single-column decimal text, one sample per line; blank lines ignored.
Waveform read_vibration_text(const std::string& path, double rate);
void write_vibration_text(const std::string& path, const Waveform& w);

}  // namespace mavgram
