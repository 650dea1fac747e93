Cypress.Commands.add('login', (user, pass) => {
  cy.visit('/login');
  cy.get('#user').type(user);
  cy.get('#pass').type(pass, { log: false });
  cy.get('button').click();
});

describe('dashboard', () => {
  it('shows widgets after login', () => {
    cy.login('erin', 'pw');
    cy.get('.widget').should('have.length.at.least', 3);
    cy.get('.widget').eq(1).click();
  });
});
