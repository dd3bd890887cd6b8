"""Few-shot prompt templates for every gateway role.

Each template is an instruction, a pool of demonstrations (the first
``shot_count`` are used) and a query part with ``$slot`` placeholders.
"""
from __future__ import annotations

from dataclasses import dataclass
from string import Template


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    instruction: str
    demonstrations: tuple[str, ...]
    query: Template

    @property
    def slots(self) -> list[str]:
        found = []
        for m in self.query.pattern.finditer(self.query.template):
            name = m.group("named") or m.group("braced")
            if name and name not in found:
                found.append(name)
        return found


KG_GENERATE = PromptTemplate(
    "kg_generate/v1",
    "Given a question and the topic entities it mentions, write one chain of Freebase "
    "relations from every topic entity toward the answer. Think first, then give all "
    'chains after "Path:" as {"entity": [entity → relation → ...]}.',
    (
        """Question: Which university did the daughters of Barack Obama attend?
Topic Entities: ["Barack Obama"]
Thought: One topic entity, so one chain. From Barack Obama I first need his children, then the schools they attended.
Path: {"Barack Obama": [Barack Obama → people.person.children → people.person.education → education.education.institution]}""",
        """Question: What language is spoken in the country whose capital is Lima?
Topic Entities: ["Lima"]
Thought: From Lima go to the country it is capital of, then to the languages spoken there.
Path: {"Lima": [Lima → location.location.containedby → location.country.languages_spoken]}""",
        """Question: Which films directed by Christopher Nolan star Michael Caine?
Topic Entities: ["Christopher Nolan", "Michael Caine"]
Thought: Two topic entities, so two chains whose ends must agree. Nolan leads to the films he directed. Caine leads to the films he acted in, through a performance node.
Path: {"Christopher Nolan": [Christopher Nolan → film.director.film], "Michael Caine": [Michael Caine → film.actor.film → film.performance.film]}""",
        """Question: Who was the head coach of the team that won the 2010 World Series?
Topic Entities: ["2010 World Series"]
Thought: From the series go to the champion team, then to its coaching position and the person holding it.
Path: {"2010 World Series": [2010 World Series → sports.sports_championship_event.champion → sports.sports_team.coaches → sports.sports_team_coach_tenure.coach]}""",
        """Question: What currency is used in the country where the Amazon river starts?
Topic Entities: ["Amazon River"]
Thought: From the river go to its source country, then to the currency used there.
Path: {"Amazon River": [Amazon River → geography.river.origin → location.location.containedby → location.country.currency_used]}""",
        """Question: Which city that hosted the Olympics is located in Japan?
Topic Entities: ["Olympic Games", "Japan"]
Thought: From the Olympic Games find the host cities; from Japan find the cities it contains. The answer lies on both chains.
Path: {"Olympic Games": [Olympic Games → olympics.olympic_games.host_city], "Japan": [Japan → location.location.contains]}""",
    ),
    Template("Question: $question\nTopic Entities: $topic_entities\nThought:"),
)

KG_EDIT = PromptTemplate(
    "kg_edit/v1",
    "Task: a path was grounded on a knowledge graph and got stuck. Using the question, the "
    "initial path and the feedback below, correct the path. Give the corrected chains "
    'after "Path:" in the same format as the initial path.',
    (
        """Question: Which movie featured Keanu Reeves and was directed by Lana Wachowski?
Initial Path: Path: {"Keanu Reeves": [Keanu Reeves → film.actor.film], "Lana Wachowski": [Lana Wachowski → film.director.film]}
Error Message
1. <compound node> in the end. (path from "Keanu Reeves")
Instantiation Context
Instantiate Paths: Keanu Reeves --film.actor.film--> compound node
Candidate Relations
['film.performance.character', 'film.performance.film']
Corrected Path
Thought: The actor chain ends on performance nodes. film.performance.film leads from a performance to the movie.
Path: {"Keanu Reeves": [Keanu Reeves → film.actor.film → film.performance.film], "Lana Wachowski": [Lana Wachowski → film.director.film]}""",
        """Question: What is the currency of the country where the Peruvian Paso breed originated?
Initial Path: Path: {"Peruvian Paso": [Peruvian Paso → biology.organism.breeds → biology.breed.originated_in → location.country.currency_used]}
Error Message
1. relation "biology.organism.breeds" not instantiated from "Peruvian Paso" (position 0).
Instantiation Context
Instantiate Paths: none
Candidate Relations
['biology.animal_breed.breed_of', 'biology.breed.originated_in']
Corrected Path
Thought: Peruvian Paso is already a breed, so the first relation is unnecessary.
Path: {"Peruvian Paso": [Peruvian Paso → biology.breed.originated_in → location.country.currency_used]}""",
        """Question: What can tourists see in the country that contains Gozo?
Initial Path: Path: {"Gozo": [Gozo → location.location.containedby → location.country.attractions]}
Error Message
1. relation "location.country.attractions" not instantiated from "Gozo" (position 1).
Instantiation Context
Instantiate Paths: Gozo --location.location.containedby--> Malta
Candidate Relations
['location.country.capital', 'travel.travel_destination.tourist_attractions']
Corrected Path
Thought: Gozo is contained by Malta. Attractions are reached through travel.travel_destination.tourist_attractions.
Path: {"Gozo": [Gozo → location.location.containedby → travel.travel_destination.tourist_attractions]}""",
        """Question: Where did the author of The Hobbit go to school?
Initial Path: Path: {}
Error Message
1. empty path from "The Hobbit".
Instantiation Context
Instantiate Paths: none
Candidate Relations
['book.written_work.author', 'book.book.genre']
Corrected Path
Thought: First get the author of the book, then the schools the author attended.
Path: {"The Hobbit": [The Hobbit → book.written_work.author → people.person.education → education.education.institution]}""",
        """Question: Which team does the player who wears number 23 for the Bulls play for now?
Initial Path: Path: {"Chicago Bulls": [Chicago Bulls → sports.sports_team.roster → sports.sports_team_roster.player → sports.pro_athlete.current_team]}
Error Message
1. <compound node> in the end. (path from "Chicago Bulls")
Instantiation Context
Instantiate Paths: Chicago Bulls --sports.sports_team.roster--> compound node --sports.sports_team_roster.player--> Michael Jordan --sports.pro_athlete.teams--> compound node
Candidate Relations
['sports.sports_team_roster.team', 'sports.sports_team_roster.number']
Corrected Path
Thought: The last hop ends on roster nodes; sports.sports_team_roster.team reaches the team itself.
Path: {"Chicago Bulls": [Chicago Bulls → sports.sports_team.roster → sports.sports_team_roster.player → sports.pro_athlete.teams → sports.sports_team_roster.team]}""",
    ),
    Template("Question: $question\nInitial Path: $previous_path\n$feedback\nCorrected Path\nThought:"),
)

KG_REASON = PromptTemplate(
    "kg_reason/v1",
    "Answer the question with the knowledge triplets (entity, relation, entity) retrieved "
    "from a knowledge graph. If the triplets are not enough, use your own knowledge. "
    "Think step by step. Use {} to enclose the answer!",
    (
        """Q: Where did the author of The Long Winter live?
Knowledge Triplets:
(The Long Winter, book.written_work.author, Laura Ingalls Wilder)
(Laura Ingalls Wilder, people.person.places_lived, m.28e5697)
(m.28e5697, people.place_lived.location, De Smet)
A: The Long Winter was written by Laura Ingalls Wilder, and her places_lived node points to De Smet. So, the answer is {De Smet}.""",
        """Q: What language is spoken in the country whose capital is Lima?
Knowledge Triplets:
(Lima, location.location.containedby, Peru)
(Peru, location.country.languages_spoken, Spanish)
(Peru, location.country.languages_spoken, Quechua)
A: Lima is in Peru, and Peru speaks Spanish and Quechua. So, the answer is {Spanish, Quechua}.""",
        """Q: Which films directed by Christopher Nolan star Michael Caine?
Knowledge Triplets:
(Christopher Nolan, film.director.film, Inception)
(Christopher Nolan, film.director.film, Memento)
(Michael Caine, film.actor.film, m.0k2c1)
(m.0k2c1, film.performance.film, Inception)
A: Nolan directed Inception and Memento; Caine performed in Inception. So, the answer is {Inception}.""",
        """Q: What currency is used in the country where the Amazon river starts?
Knowledge Triplets:
(Amazon River, geography.river.origin, Nevado Mismi)
(Nevado Mismi, location.location.containedby, Peru)
(Peru, location.country.currency_used, Peruvian sol)
A: The Amazon starts at Nevado Mismi in Peru, whose currency is the Peruvian sol. So, the answer is {Peruvian sol}.""",
        """Q: Who founded the company that makes the iPhone?
Knowledge Triplets:
(iPhone, business.consumer_product.company, Apple Inc.)
A: The iPhone is made by Apple Inc. The triplets do not list founders, but Apple was founded by Steve Jobs, Steve Wozniak and Ronald Wayne. So, the answer is {Steve Jobs, Steve Wozniak, Ronald Wayne}.""",
    ),
    Template("Q: $question\nCandidate Answers: $candidates\nKnowledge Triplets:\n$triples\nA:"),
)

_USL_TABLE = """| year | division | league | regular season | playoffs | open cup | avg. attendance |
| -- | -- | -- | -- | -- | -- | -- |
| 2001 | 2 | USL A-League | 4th, Western | Quarterfinals | Did not qualify | 7,169 |"""

TABLE_GENERATE = PromptTemplate(
    "table_generate/v1",
    "Pick the table headers needed to answer the question and the row values that constrain "
    "the answer. Choose at least two headers. End with a \"Chosen Headers:\" list and a "
    '"Constrains:" mapping from header to allowed values.',
    (
        f"""Question: what was the last year where this team was a part of the usl a-league?
{_USL_TABLE}
Thought: I need the years in which the league was usl a-league, so headers "year" and "league", constrained on "league".
Chosen Headers: ["year", "league"]
Constrains: {{"league": ["usl a-league"]}}""",
        """Question: which is deeper, lake tuz or lake palas tuzla?
| Name in English | Name in Turkish | Area (km2) | Depth | Location (Districts and/or provinces) |
| -- | -- | -- | -- | -- |
| Lake Van | Van Gölü | 3755 km2 | 171 m | Van, Bitlis |
Thought: I compare the depth of two named lakes, so headers "Name in English" and "Depth", restricted to those two names.
Chosen Headers: ["Name in English", "Depth"]
Constrains: {"Name in English": ["Lake Tuz", "Lake Palas Tuzla"]}""",
        """Question: how many gold medals did norway win?
| Rank | Nation | Gold | Silver | Bronze | Total |
| -- | -- | -- | -- | -- | -- |
| 1 | Germany | 10 | 13 | 7 | 30 |
Thought: I need the gold count of Norway: headers "Nation" and "Gold", constrained on "Nation".
Chosen Headers: ["Nation", "Gold"]
Constrains: {"Nation": ["Norway"]}""",
        """Question: who scored more goals, smith or jones?
| Player | Club | Goals | Apps |
| -- | -- | -- | -- |
| Brown | Leeds | 12 | 30 |
Thought: I compare goals of two players: headers "Player" and "Goals", constrained on both players.
Chosen Headers: ["Player", "Goals"]
Constrains: {"Player": ["Smith", "Jones"]}""",
        """Question: what is the total number of episodes directed by anna park?
| No. | Title | Directed by | Written by | Air date |
| -- | -- | -- | -- | -- |
| 1 | Pilot | Anna Park | Lee Moss | March 3, 2009 |
Thought: I count titles whose director is Anna Park: headers "Title" and "Directed by".
Chosen Headers: ["Title", "Directed by"]
Constrains: {"Directed by": ["Anna Park"]}""",
        """Question: which album was released first?
| Year | Album | Label | Chart peak |
| -- | -- | -- | -- |
| 1998 | Blue | Arista | 12 |
Thought: I need every album with its year and no row constraint.
Chosen Headers: ["Year", "Album"]
Constrains: {}""",
        """Question: in which city did the team play after 2005?
| Season | City | Stadium | Coach |
| -- | -- | -- | -- |
| 2004 | Austin | Northfield | R. Diaz |
Thought: I need seasons and cities; the year comparison is done afterwards, so no row constraint.
Chosen Headers: ["Season", "City"]
Constrains: {}""",
    ),
    Template("Question: $question\n$table\nThought:"),
)

TABLE_EDIT = PromptTemplate(
    "table_edit/v1",
    "Your previous headers or constrains for the question contain mistakes. Follow the "
    'feedback and give corrected "Chosen Headers:" and "Constrains:" lines.',
    (
        f"""Question: what was the last year where this team was a part of the usl a-league?
{_USL_TABLE}
Wrong Answer:
Chosen Headers: ["year", "team"]
Constrains: {{"team": ["usl a-league"]}}
Feedback:
1. Header ['team'] not in candidate Headers. You can only choose headers from ["year", "division", "league", "regular season", "playoffs", "open cup", "avg. attendance"].
Thought: "team" does not exist; the competition is in "league". I need "year" and "league".
Chosen Headers: ["year", "league"]
Constrains: {{"league": ["usl a-league"]}}""",
        """Question: how many gold medals did norway win?
| Rank | Nation | Gold | Silver | Bronze | Total |
| -- | -- | -- | -- | -- | -- |
| 1 | Germany | 10 | 13 | 7 | 30 |
Wrong Answer:
Chosen Headers: ["Gold"]
Constrains: {"Nation": ["Norway"]}
Feedback:
1. Chosen headers contain fewer than 2 columns. You can only choose headers from ["Rank", "Nation", "Gold", "Silver", "Bronze", "Total"].
Thought: I also need "Nation" to locate Norway.
Chosen Headers: ["Nation", "Gold"]
Constrains: {"Nation": ["Norway"]}""",
    ),
    Template("Question: $question\n$table\nWrong Answer:\n$previous_path\nFeedback:\n$feedback\nThought:"),
)

TABLE_REASON = PromptTemplate(
    "table_reason/v1",
    "Answer the question from the table items. "
    "Output your answer in the last line as \"Answer: ['your answer']\"!",
    (
        """Question: what was the last year where this team was a part of the usl a-league?
Table:
Headers: league, year
item 1: (league, usl a-league); (year, 2001)
item 2: (league, usl a-league); (year, 2002)
item 3: (league, usl a-league); (year, 2003)
Thought: The years are 2001, 2002 and 2003; the latest is 2003.
Answer: ['2003']""",
        """Question: which is deeper, lake tuz or lake palas tuzla?
Table:
Headers: Name in English, Depth
item 1: (Name in English, Lake Tuz); (Depth, 2 m)
item 2: (Name in English, Lake Palas Tuzla); (Depth, 15 m)
Thought: 15 m is more than 2 m.
Answer: ['Lake Palas Tuzla']""",
        """Question: how many gold medals did norway win?
Table:
Headers: Nation, Gold
item 1: (Nation, Norway); (Gold, 9)
Thought: Norway has 9 gold medals.
Answer: ['9']""",
        """Question: who scored more goals, smith or jones?
Table:
Headers: Player, Goals
item 1: (Player, Smith); (Goals, 14)
item 2: (Player, Jones); (Goals, 17)
Thought: Jones has 17, Smith 14.
Answer: ['Jones']""",
        """Question: what is the total number of episodes directed by anna park?
Table:
Headers: Title, Directed by
item 1: (Title, Pilot); (Directed by, Anna Park)
item 2: (Title, Homecoming); (Directed by, Anna Park)
item 3: (Title, Finale); (Directed by, Anna Park)
Thought: Three items match.
Answer: ['3']""",
        """Question: which album was released first?
Table:
Headers: Year, Album
item 1: (Year, 1998); (Album, Blue)
item 2: (Year, 1995); (Album, Red)
item 3: (Year, 2001); (Album, Green)
Thought: 1995 is the earliest year.
Answer: ['Red']""",
        """Question: in which cities did the team play after 2005?
Table:
Headers: Season, City
item 1: (Season, 2004); (City, Austin)
item 2: (Season, 2006); (City, Dallas)
item 3: (Season, 2007); (City, Houston)
Thought: Seasons after 2005 are 2006 and 2007.
Answer: ['Dallas', 'Houston']""",
    ),
    Template("Question: $question\nTable:\n$items\nThought:"),
)

TEMPLATES: dict[str, PromptTemplate] = {
    t.template_id: t
    for t in (KG_GENERATE, KG_EDIT, KG_REASON, TABLE_GENERATE, TABLE_EDIT, TABLE_REASON)
}
