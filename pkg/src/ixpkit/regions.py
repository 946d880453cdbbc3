"""Country to continent assignment.

Seven world regions are used everywhere in this toolkit: Africa, Asia
Pacific, Australia (covering Oceania), Europe, Middle East, North America
(covering Central America and the Caribbean), and South America. The
assignment is a fixed table keyed by ISO 3166-1 alpha-2 code. Notable
choices: Russia counts as Europe, Turkey as Middle East, the Caucasus as
Europe, Central Asia as Asia Pacific.

Unknown or unassigned codes (including the "ZZ" sentinel) map to
Continent.UNKNOWN; callers decide whether that is a warning.
"""

from enum import Enum


class Continent(str, Enum):
    AFRICA = "Africa"
    ASIA_PACIFIC = "Asia Pacific"
    AUSTRALIA = "Australia"
    EUROPE = "Europe"
    MIDDLE_EAST = "Middle East"
    NORTH_AMERICA = "North America"
    SOUTH_AMERICA = "South America"
    UNKNOWN = "Unknown"


UNKNOWN_COUNTRY = "ZZ"

_REGIONS: dict[Continent, str] = {
    Continent.AFRICA: (
        "AO BF BI BJ BW CD CF CG CI CM CV DJ DZ EG EH ER ET GA GH GM GN GQ "
        "GW KE KM LR LS LY MA MG ML MR MU MW MZ NA NE NG RE RW SC SD SH SL "
        "SN SO SS ST SZ TD TG TN TZ UG YT ZA ZM ZW"
    ),
    Continent.ASIA_PACIFIC: (
        "AF BD BN BT CN HK ID IN IO JP KG KH KP KR KZ LA LK MM MN MO MV MY "
        "NP PH PK SG TH TJ TL TM TW UZ VN"
    ),
    Continent.AUSTRALIA: (
        "AS AU CK FJ FM GU KI MH MP NC NF NR NU NZ PF PG PN PW SB TK TO TV "
        "VU WF WS"
    ),
    Continent.EUROPE: (
        "AD AL AM AT AX AZ BA BE BG BY CH CY CZ DE DK EE ES FI FO FR GB GE "
        "GG GI GR HR HU IE IM IS IT JE LI LT LU LV MC MD ME MK MT NL NO PL "
        "PT RO RS RU SE SI SJ SK SM UA VA XK"
    ),
    Continent.MIDDLE_EAST: "AE BH IL IQ IR JO KW LB OM PS QA SA SY TR YE",
    Continent.NORTH_AMERICA: (
        "AG AI AW BB BL BM BQ BS BZ CA CR CU CW DM DO GD GL GP GT HN HT JM "
        "KN KY LC MF MQ MS MX NI PA PM PR SV SX TC TT US VC VG VI"
    ),
    Continent.SOUTH_AMERICA: "AR BO BR CL CO EC FK GF GY PE PY SR UY VE",
}

COUNTRY_TO_CONTINENT: dict[str, Continent] = {
    code: continent
    for continent, codes in _REGIONS.items()
    for code in codes.split()
}


def continent_for(country: str) -> Continent:
    """Continent for an ISO alpha-2 country code; UNKNOWN if unassigned."""
    return COUNTRY_TO_CONTINENT.get(country.upper(), Continent.UNKNOWN)


def is_known_country(country: str) -> bool:
    return country.upper() in COUNTRY_TO_CONTINENT
