#pragma once

// Values printed by free_gaussian.py (mpmath, 40 digits), hbar = m = 1.

#include <array>

namespace oracle {

struct FreeGaussianSample {
    double sigma0, t, x, re, im, v, width;
};

inline constexpr std::array<FreeGaussianSample, 18> kFreeGaussian{{
    {1.0, 0.0, -1.5, 0.3598855313372458, 0.0, 0.0, 1.0},
    {1.0, 0.0, 0.25, 0.62182643623671164, 0.0, 0.0, 1.0},
    {1.0, 0.0, 2.0, 0.23235956299061171, 0.0, 0.0, 1.0},
    {1.0, 0.5, -1.5, 0.36637941374717908, 0.0036139407092706811, -0.17647058823529412, 1.0307764064044151},
    {1.0, 0.5, 0.25, 0.60871431803194012, -0.072665338514122114, 0.029411764705882353, 1.0307764064044151},
    {1.0, 0.5, 2.0, 0.24118816267811179, 0.027323172592772899, 0.23529411764705882, 1.0307764064044151},
    {1.0, 1.0, -1.5, 0.3808771347763671, -0.002599071447833843, -0.3, 1.1180339887498948},
    {1.0, 1.0, 0.25, 0.57498250776007921, -0.13194659042373034, 0.05, 1.1180339887498948},
    {1.0, 1.0, 2.0, 0.26461907506648704, 0.04492699027604921, 0.4, 1.1180339887498948},
    {0.5, 0.0, -1.5, 0.094147208263846116, 0.0, 0.0, 0.5},
    {0.5, 0.0, 0.25, 0.83912493320637241, 0.0, 0.0, 0.5},
    {0.5, 0.0, 2.0, 0.016360331644858875, 0.0, 0.0, 0.5},
    {0.5, 0.5, -1.5, 0.1813396715219978, 0.16303701464424766, -1.5, 0.70710678118654752},
    {0.5, 0.5, 0.25, 0.68097536464812717, -0.25744828107875833, 0.25, 0.70710678118654752},
    {0.5, 0.5, 2.0, -0.0037100059059194889, 0.1015860646605826, 2.0, 0.70710678118654752},
    {0.5, 1.0, -1.5, 0.35825846000560017, 0.1293252597223823, -1.2, 1.1180339887498948},
    {0.5, 1.0, 0.25, 0.50941850958542415, -0.29750221687624836, 0.2, 1.1180339887498948},
    {0.5, 1.0, 2.0, 0.13438230240211619, 0.23234260510163331, 1.6, 1.1180339887498948},
}};

}  // namespace oracle
