"""Published fixture adjacency matrices (3 decimals) and their optimal lambda_2."""

KNOWN_OPTIMA = {
    8: (22.8042, 24.3207, 26.4111, 28.6912, 22.5051, 25.2167, 22.8752, 28.4397, 26.7965, 27.4913),
    9: (28.2168, 26.3675, 29.8184, 25.8427, 24.2756, 30.0202, 25.641, 26.9705, 33.5068, 31.7445),
}

# upper triangles, row by row
UPPER_TRIANGLES = {
    8: (
        "4.561 19.020 37.537 82.393 18.295 50.073 5.511 50.358 2.819 5.916 34.933 43.855 44.377 "
        "16.268 11.806 2.159 45.568 77.271 28.642 45.083 62.932 24.352 2.590 23.840 13.704 "
        "4.041 35.791 55.830",
        "7.991 19.023 40.147 46.093 9.834 48.182 39.823 82.412 17.293 26.714 31.590 36.865 "
        "22.808 34.046 22.715 18.902 50.309 14.671 25.462 10.701 51.117 34.138 38.596 53.231 "
        "16.664 13.779 58.921 53.351",
        "5.449 13.087 39.460 14.189 26.056 30.279 41.788 23.490 18.772 24.992 43.876 14.074 "
        "66.580 13.379 44.093 11.845 45.530 65.366 28.403 54.327 68.801 30.908 31.147 62.558 "
        "8.237 21.427 78.777 61.276",
        "3.166 10.819 69.610 7.771 35.867 47.759 11.385 23.452 26.608 13.743 63.817 56.875 "
        "12.734 16.165 30.174 46.717 41.704 66.899 5.841 57.495 67.210 14.102 63.502 61.732 "
        "23.618 11.427 38.997 98.913",
        "2.544 18.566 23.983 44.333 11.513 47.634 8.196 17.548 20.902 29.848 56.828 16.094 "
        "45.784 20.030 21.883 21.306 19.583 13.961 33.448 50.940 7.763 22.462 60.604 57.279 "
        "7.599 19.492 7.163 98.613",
        "3.368 5.354 64.684 66.925 28.203 41.094 53.284 34.119 8.390 27.285 35.904 11.076 "
        "51.050 33.155 33.273 28.636 34.563 59.182 28.884 20.305 43.513 15.110 62.458 34.925 "
        "3.265 4.674 27.095 45.437",
        "5.721 8.828 22.020 55.966 5.384 34.178 43.546 17.823 18.462 31.074 26.090 18.068 "
        "28.879 23.527 25.014 48.801 40.533 53.078 37.835 38.275 4.024 19.766 50.395 50.884 "
        "11.786 12.491 35.477 71.750",
        "1.537 12.505 45.077 68.271 6.608 20.672 37.893 76.166 11.996 10.903 25.450 57.973 "
        "36.482 37.794 22.848 20.843 15.406 39.688 37.311 29.056 36.097 27.623 63.989 59.293 "
        "4.220 12.757 33.223 105.431",
        "7.473 13.871 74.945 59.785 28.499 36.559 41.392 63.104 1.118 18.255 56.460 30.670 "
        "28.415 21.090 12.332 26.304 31.328 38.784 34.870 35.743 13.807 6.835 74.240 78.291 "
        "8.182 13.607 60.731 100.509",
        "4.673 11.233 47.921 20.123 5.275 11.570 41.965 59.460 26.490 24.895 48.453 49.937 "
        "45.337 20.843 21.083 33.312 3.120 56.785 23.790 14.368 57.961 26.491 63.058 84.360 "
        "10.774 6.137 37.142 82.681",
    ),
    9: (
        "51.109 103.141 74.350 3.664 13.229 15.797 18.230 30.797 79.543 7.805 19.555 18.661 "
        "25.386 54.808 67.820 25.047 4.786 38.796 46.383 6.685 88.554 28.353 23.511 55.800 "
        "46.123 91.246 39.345 74.242 116.722 68.593 61.739 65.714 3.377 6.930 25.114 30.790",
        "55.451 35.171 84.885 5.505 20.855 29.453 30.388 68.093 66.881 7.059 15.901 21.996 "
        "19.397 65.193 64.995 11.186 20.066 14.621 61.816 69.104 45.769 52.853 46.755 65.175 "
        "47.878 72.586 14.783 39.858 15.650 76.328 63.148 55.653 6.730 3.325 11.846 30.335",
        "34.962 106.416 83.430 3.962 19.667 16.809 40.972 23.189 62.136 6.460 21.299 20.235 "
        "55.212 32.185 65.989 3.817 19.672 35.388 38.132 65.466 31.264 23.553 67.925 56.553 "
        "49.485 72.971 64.328 41.192 98.448 78.225 64.970 78.577 6.603 5.339 19.096 16.332",
        "37.880 67.875 100.379 6.067 8.170 32.228 30.653 34.148 80.509 5.478 21.916 35.606 "
        "22.303 51.762 83.597 9.380 22.829 41.847 43.423 38.497 80.200 39.792 40.394 34.656 "
        "47.301 56.581 82.544 76.565 82.045 15.671 60.790 137.604 5.053 4.473 16.443 23.297",
        "74.434 54.004 49.180 3.425 23.574 14.026 46.679 27.705 72.725 12.127 5.963 32.650 "
        "47.091 6.417 5.720 6.283 23.399 34.824 60.464 43.262 73.479 34.042 36.230 30.105 "
        "61.880 70.808 41.705 37.664 71.445 28.397 49.857 64.825 4.676 6.500 13.624 17.935",
        "64.068 10.484 82.702 5.059 17.211 41.722 51.143 34.027 38.358 13.136 19.432 8.179 "
        "36.737 43.368 44.477 4.736 19.992 35.610 68.747 66.199 100.487 26.705 69.996 24.366 "
        "62.367 68.319 6.220 42.855 100.982 54.818 71.220 79.242 6.379 4.100 13.469 20.063",
        "84.178 40.000 94.496 3.252 19.661 19.108 56.048 40.033 110.743 7.442 15.846 35.148 "
        "24.472 52.636 21.187 19.213 19.871 9.568 67.812 51.830 56.333 25.484 26.072 51.210 "
        "33.379 75.134 84.510 28.471 115.426 110.035 34.251 47.000 6.161 3.757 9.776 31.904",
        "46.103 105.745 61.239 5.627 18.101 24.459 47.970 58.582 26.179 6.670 23.523 30.729 "
        "48.579 61.829 49.850 7.958 26.819 26.925 39.978 58.829 59.187 16.321 65.826 27.566 "
        "56.328 93.999 19.572 19.077 26.750 87.654 61.369 93.219 4.440 5.917 14.002 27.248",
        "49.524 47.001 97.199 5.978 14.685 32.794 36.858 34.073 92.926 2.890 25.966 23.370 "
        "19.856 72.462 61.856 20.361 10.725 26.954 27.427 41.613 39.825 21.730 43.284 94.839 "
        "100.156 61.767 52.430 78.240 76.468 111.859 129.134 70.418 1.984 2.300 16.639 31.418",
        "73.479 78.550 57.077 2.770 16.830 27.284 13.703 45.902 96.045 7.971 14.967 18.793 "
        "24.575 22.947 58.603 9.560 14.197 14.033 69.942 64.482 71.409 44.664 40.189 51.466 "
        "33.023 67.021 65.935 86.901 96.362 119.533 90.886 50.091 3.862 3.593 20.033 14.719",
    ),
}
