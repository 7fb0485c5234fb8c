#pragma once

// On-disk dataset layout:
//   root/images/<id>.ppm   RGB fundus image
//   root/labels/<id>.pgm   vessel mask {0,255}
//   root/fov/<id>.pgm      field-of-view mask {0,255}
//   root/strata.txt        optional, "<id>\t<stratum>" per line

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vseg/image_io.hpp"

namespace vseg {

struct Sample {
  std::string id;
  RgbImage image;
  BinaryMask label;
  BinaryMask fov;
};

struct Dataset {
  std::vector<Sample> samples;  // sorted by id
  std::map<std::string, std::string> strata;
};

/// Sorted basenames of `dir/*<ext>`.
std::vector<std::string> list_ids(const std::filesystem::path& dir, const std::string& ext);

/// Loads every image with its label and FOV masks. Throws EmptyDataset when
/// there are no images and LayoutError when a companion file is missing or
/// its dimensions differ.
Dataset load_dataset(const std::filesystem::path& root);

std::map<std::string, std::string> read_strata(const std::filesystem::path& path);

void write_dataset(const std::vector<Sample>& samples, const std::map<std::string, std::string>& strata,
                   const std::filesystem::path& root);

}  // namespace vseg
