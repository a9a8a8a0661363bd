// Generated by freeze.py; do not edit by hand.
#pragma once

namespace oracle {

inline constexpr double design_a_x[10] = {0.0, 0.05, 0.13, 0.2, 0.37, 0.5, 0.61, 0.8, 0.94, 1.0};
inline constexpr double design_a[10][8] = {
  {1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
  {0.4218750000000001, 0.4960937500000001, 0.07942708333333333, 0.0026041666666666665, 0.0, 0.0, 0.0, 0.0},
  {0.04287500000000001, 0.52934375, 0.3820104166666667, 0.04577083333333332, 0.0, 0.0, 0.0, 0.0},
  {0.0, 0.25, 0.5833333333333334, 0.16666666666666666, 0.0, 0.0, 0.0, 0.0},
  {0.0, 0.0008437500000000023, 0.25094791666666677, 0.6458541666666665, 0.10235416666666658, 0.0, 0.0, 0.0},
  {0.0, 0.0, 0.020833333333333374, 0.47916666666666674, 0.4791666666666664, 0.02083333333333331, 0.0, 0.0},
  {0.0, 0.0, 0.0, 0.14289583333333347, 0.6642291666666668, 0.19284374999999987, 3.124999999999906e-05, 0.0},
  {0.0, 0.0, 0.0, 0.0, 0.16666666666666663, 0.5833333333333334, 0.25, 0.0},
  {0.0, 0.0, 0.0, 0.0, 0.004500000000000014, 0.11025000000000021, 0.5422500000000001, 0.34299999999999947},
  {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0}};
inline constexpr double design_a_dx[5] = {0.07, 0.23, 0.5, 0.77, 0.93};
inline constexpr double design_a_d1[5][8] = {
  {-6.3374999999999995, 2.465624999999999, 3.5656250000000007, 0.30624999999999997, 0.0, 0.0, 0.0, 0.0},
  {0.0, -2.709375, -0.42812499999999964, 3.08125, 0.056249999999999974, 0.0, 0.0, 0.0},
  {0.0, 0.0, -0.6250000000000006, -3.1249999999999982, 3.124999999999999, 0.6249999999999996, 0.0, 0.0},
  {0.0, 0.0, 0.0, -0.0562500000000001, -3.081250000000001, 0.4281250000000014, 2.7093749999999996, 0.0},
  {0.0, 0.0, 0.0, 0.0, -0.3062499999999997, -3.565625, -2.4656250000000055, 6.337500000000005}};
inline constexpr double design_a_d2[5][8] = {
  {97.5, -133.125, 26.874999999999996, 8.749999999999998, 0.0, 0.0, 0.0, 0.0},
  {0.0, 31.875000000000004, -49.37500000000001, 13.75, 3.7499999999999982, 0.0, 0.0, 0.0},
  {0.0, 0.0, 12.5, -12.50000000000001, -12.499999999999986, 12.499999999999993, 0.0, 0.0},
  {0.0, 0.0, 0.0, 3.750000000000003, 13.749999999999993, -49.37499999999999, 31.875000000000004, 0.0},
  {0.0, 0.0, 0.0, 0.0, 8.749999999999998, 26.875000000000032, -133.1250000000001, 97.50000000000006}};
inline constexpr double integrals_a[8] = {0.05, 0.1, 0.15000000000000002, 0.2, 0.2, 0.15, 0.09999999999999998, 0.04999999999999999};
inline constexpr double derivpen_a[8][8] = {
  {1500.0000000000005, -2062.5000000000005, 437.5, 124.99999999999999, 0.0, 0.0, 0.0, 0.0},
  {-2062.5000000000005, 3000.0, -843.7500000000001, -125.0, 31.249999999999996, 0.0, 0.0, 0.0},
  {437.5, -843.7500000000001, 562.5, -166.66666666666663, -10.416666666666659, 20.833333333333332, 0.0, 0.0},
  {124.99999999999999, -125.0, -166.66666666666663, 333.33333333333326, -187.4999999999999, -10.416666666666718, 31.25, 0.0},
  {0.0, 31.249999999999996, -10.416666666666659, -187.4999999999999, 333.3333333333332, -166.66666666666657, -125.00000000000013, 125.00000000000006},
  {0.0, 0.0, 20.833333333333332, -10.416666666666718, -166.66666666666657, 562.5000000000001, -843.7500000000002, 437.50000000000006},
  {0.0, 0.0, 0.0, 31.25, -125.00000000000013, -843.7500000000002, 3000.0000000000014, -2062.5000000000005},
  {0.0, 0.0, 0.0, 0.0, 125.00000000000006, 437.50000000000006, -2062.5000000000005, 1500.0000000000007}};

inline constexpr double design_b_x[7] = {-2.0, -1.3, -0.01, 0.5, 1.7, 2.9, 3.0};
inline constexpr double design_b[7][5] = {
  {1.0, 0.0, 0.0, 0.0, 0.0},
  {0.3364000000000001, 0.5754, 0.0882, 0.0, 0.0},
  {0.0, 0.32481800000000005, 0.656364, 0.01881799999999999, 0.0},
  {0.0, 0.12500000000000003, 0.75, 0.12499999999999999, 0.0},
  {0.0, 0.0, 0.3042000000000001, 0.6474000000000001, 0.04839999999999996},
  {0.0, 0.0, 0.0018000000000000036, 0.11460000000000012, 0.8835999999999999},
  {0.0, 0.0, 0.0, 0.0, 1.0}};
inline constexpr double integrals_b[5] = {0.5555555555555556, 1.1111111111111112, 1.6666666666666665, 1.111111111111111, 0.5555555555555555};

inline constexpr double cyclic_hi = 6.283185307179586;
inline constexpr double cyclic_x[6] = {0.0, 0.9, 2.5, 4.0, 5.9, 6.283185307179586};
inline constexpr double cyclic_design[6][6] = {
  {0.0, 0.0, 0.0, 0.16666666666666666, 0.6666666666666666, 0.16666666666666666},
  {0.10580115870811097, 0.0, 0.0, 0.0004628759867595115, 0.24543871403835701, 0.6482972512667725},
  {0.5456998554279855, 0.406285553910673, 0.009684394376366196, 0.0, 0.0, 0.038330196284975186},
  {0.000976565254587483, 0.2701283392265272, 0.6370949915776947, 0.09180010394119063, 0.0, 0.0},
  {0.0, 0.0, 0.008165625165942748, 0.39207419737772115, 0.5572697442936336, 0.0424904331627024},
  {0.0, 0.0, 0.0, 0.16666666666666666, 0.6666666666666666, 0.16666666666666666}};

inline constexpr double gauss_cases[4][4] = {
  {0.3, 0.0, 1.0, -0.9639385332046727},
  {-2.5, 1.0, 0.5, -24.72579135264473},
  {7.0, 5.0, 3.0, -2.2397730440950046},
  {1.0, 1.0, 10.0, -3.2215236261987186}};
inline constexpr double gamma_cases[9][4] = {
  {0.1, 2.0, 0.5, -29.966983111874207},
  {2.2, 2.0, 0.5, -0.40134631149946154},
  {7.0, 2.0, 0.5, -21.439554481133815},
  {0.1, 1.0, 1.0, -0.1},
  {2.2, 1.0, 1.0, -2.2},
  {7.0, 1.0, 1.0, -7.0},
  {0.1, 5.0, 3.0, -6.279910964664111},
  {2.2, 5.0, 3.0, -1.9513910475826626},
  {7.0, 5.0, 3.0, -2.5603638676874745}};
inline constexpr double vonmises_cases[18][4] = {
  {-3.0, 0.0, 0.5, -2.3944230338950496},
  {0.3, 0.0, 0.5, -1.4217585410320237},
  {2.8, 0.0, 0.5, -2.370537955929156},
  {-3.0, 1.2, 2.0, -3.642392250573701},
  {0.3, 1.2, 2.0, -1.4186506713509728},
  {2.8, 1.2, 2.0, -2.720269652494879},
  {-3.0, -0.7, 10.0, -16.443609362326285},
  {0.3, -0.7, 10.0, -4.377826090846644},
  {2.8, -0.7, 10.0, -19.145416022436006},
  {-3.0, 0.0, 120.0, -237.32533829898597},
  {0.3, 0.0, 120.0, -3.885860011859789},
  {2.8, 0.0, 120.0, -231.59291958717148},
  {-3.0, 2.0, 700.0, -499.0800472405944},
  {0.3, 2.0, 700.0, -787.8347230717201},
  {2.8, 2.0, 700.0, -209.9488805218369},
  {-3.0, 0.5, 0.0, -1.8378770664093456},
  {0.3, 0.5, 0.0, -1.8378770664093456},
  {2.8, 0.5, 0.0, -1.8378770664093456}};

inline constexpr double digamma_x[6] = {0.1, 0.5, 1.0, 3.7, 12.0, 100.0};
inline constexpr double digamma_v[6] = {-10.423754940411076, -1.9635100260214235, -0.5772156649015329, 1.1671535393615113, 2.442661679975812, 4.600161852738087};
inline constexpr double bessel_x[7] = {0.1, 1.0, 3.0, 7.5, 20.0, 120.0, 700.0};
inline constexpr double log_i0_v[7] = {0.0024984392338762438, 0.23591435850717865, 1.585307621813421, 5.591588708075275, 17.589610428244274, 116.68836164052317, 695.8056999984434};
inline constexpr double i1_over_i0_v[7] = {0.04993760398793892, 0.4463899658965345, 0.8099852939565045, 0.9307247343491271, 0.9746705078898071, 0.9958245794812278, 0.9992854588184261};

inline constexpr double fwd1_delta[2] = {0.3, 0.7};
inline constexpr double fwd1_gamma[2][2] = {
  {0.9, 0.1},
  {0.2, 0.8}};
inline constexpr double fwd1_logp[5][2] = {
  {-2.587211, -0.597347},
  {-1.21249, -0.792483},
  {-1.38136, -1.597251},
  {-1.81462, -1.713616},
  {-1.55205, -0.538954}};
inline constexpr double fwd1_loglik = -5.981778561289521;

inline constexpr double fwd2_delta[3] = {0.2, 0.5, 0.3};
inline constexpr double fwd2_gamma2[3][3] = {
  {0.5214319376992073, 0.05796894202124987, 0.42059912027954294},
  {0.3025676762944677, 0.2886445393048084, 0.4087877844007241},
  {0.48101565075547814, 0.3266966265690601, 0.1922877226754618}};
inline constexpr double fwd2_gamma3[3][3] = {
  {0.4526558273261103, 0.2756234043762355, 0.2717207682976541},
  {0.5973210326616543, 0.21146120070315227, 0.19121776663519344},
  {0.5695823733718237, 0.1230902532462629, 0.3073273733819133}};
inline constexpr double fwd2_gamma4[3][3] = {
  {0.21645811486246125, 0.46358490165725863, 0.3199569834802801},
  {0.16955833032660012, 0.5492009122412002, 0.2812407574321998},
  {0.22759807852430647, 0.6116631887550151, 0.16073873272067826}};
inline constexpr double fwd2_logp[4][3] = {
  {-1.186828, -2.740648, -3.104673},
  {-1.685512, -3.290246, -0.695384},
  {-2.98661, -0.967085, -3.996001},
  {-3.165433, -0.362676, -1.115304}};
inline constexpr double fwd2_loglik = -6.587992779171639;

inline constexpr double stat3_gamma[3][3] = {
  {0.15117823928396618, 0.1568421788686106, 0.6919795818474234},
  {0.05785428834921611, 0.5406701506301875, 0.4014755610205964},
  {0.4809866392600206, 0.2837077276953947, 0.23530563304458477}};
inline constexpr double stat3_delta[3] = {0.2540036269496983, 0.3384531629634632, 0.40754321008683875};

inline constexpr double quant_q[5] = {0.025, 0.25, 0.5, 0.75, 0.975};
inline constexpr double quant_v1[7] = {3.2, -1.5, 7.7, 0.4, 2.2, 9.9, 5.1};
inline constexpr double quant_v1_vals[5] = {-1.2149999999999999, 1.3, 3.2, 6.4, 9.57};
inline constexpr double quant_v2[6] = {1.0, 2.0, 4.0, 8.0, 16.0, 32.0};
inline constexpr double quant_v2_vals[5] = {1.125, 2.5, 6.0, 14.0, 30.0};

}  // namespace oracle
