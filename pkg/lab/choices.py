from django.db import models


class PolymerModel(models.TextChoices):
    TREE = "tree", "Lattice tree"
    ANIMAL = "animal", "Lattice animal"


class WalkKind(models.TextChoices):
    SPREAD_OUT = "spread-out", "Spread-out"
    NEAREST_NEIGHBOUR = "nearest-neighbour", "Nearest-neighbour"


class MassMethod(models.TextChoices):
    CLOSED_FORM = "closed-form", "Closed form"
    ROOT_FIND = "root-find", "Root find"


class ConvolutionMethod(models.TextChoices):
    AUTO = "auto", "Auto"
    DIRECT = "direct", "Direct"
    FOURIER = "fourier", "Fourier"


class Reduction(models.TextChoices):
    SUP = "sup", "Sup norm"
    ORIGIN = "origin", "Value at origin"


class ProfileMethod(models.TextChoices):
    QUADRATURE = "quadrature", "Direct quadrature"
    SADDLE = "saddle", "Saddle-point scaled quadrature"
    ASYMPTOTIC = "asymptotic", "Asymptotic form"
