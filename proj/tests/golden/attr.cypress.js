cy.xpath("/html/body/button[1]", { timeout: 4000 }).should("have.attr", "class", "btn active");
